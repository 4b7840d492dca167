//! Minimal-norm symmetric matrices with a prescribed traction.
//!
//! Given a unit normal `nu` and a unit traction `t`, the closed form
//!
//! ```text
//! sigma = cos(theta) nu⊗nu + sin(theta) (nu⊗f2 + f2⊗nu)
//! ```
//!
//! with `f2` the unit tangential part of `t`, satisfies `sigma nu = t`. In
//! the natural frame `{nu, f2, f3}` it reads `[[c, s, 0], [s, 0, 0], [0, 0, 0]]`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::matnorm::{norm, NormKind, SymMatrix};
use crate::scalar::{vec3, Real};

/// Orthonormal frame `f1 = nu, f2, f3` (only the first `dim` are used).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame<T> {
    pub dim: usize,
    pub f: [[T; 3]; 3],
}

impl<T: Real> Frame<T> {
    /// Frame coordinates `S_ab = f_a · sigma f_b`.
    pub fn to_frame(&self, sigma: &SymMatrix<T>) -> SymMatrix<T> {
        let q = self.f;
        sigma.conjugate(&q)
    }

    /// Standard-basis matrix `sum_ab S_ab f_a⊗f_b`.
    pub fn to_standard(&self, s: &SymMatrix<T>) -> SymMatrix<T> {
        let mut qt = [[T::zero(); 3]; 3];
        for (a, fa) in self.f.iter().enumerate() {
            for (i, row) in qt.iter_mut().enumerate() {
                row[a] = fa[i];
            }
        }
        s.conjugate(&qt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TractionProblem<T> {
    pub dim: usize,
    pub nu: [T; 3],
    pub t: [T; 3],
    pub norm: NormKind,
}

fn unit_tol<T: Real>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(8.0))
}

fn padded<T: Real>(v: &[T], dim: usize) -> Result<[T; 3]> {
    if v.len() != dim {
        return Err(Error::LengthMismatch {
            expected: dim,
            got: v.len(),
        });
    }
    let mut out = [T::zero(); 3];
    out[..dim].copy_from_slice(v);
    Ok(out)
}

impl<T: Real> TractionProblem<T> {
    pub fn new(nu: &[T], t: &[T], norm: NormKind) -> Result<Self> {
        let dim = nu.len();
        if dim != 2 && dim != 3 {
            return Err(Error::Unsupported(format!("dimension {dim}")));
        }
        let nu = padded(nu, dim)?;
        let t = padded(t, dim)?;
        for (name, v) in [("normal", &nu), ("traction", &t)] {
            if (vec3::norm(v) - T::one()).abs() > unit_tol() {
                return Err(Error::InvalidSpec(format!("{name} is not a unit vector")));
            }
        }
        Ok(Self { dim, nu, t, norm })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalBC<T> {
    /// Standard-basis entries.
    pub sigma: SymMatrix<T>,
    /// Norm of `sigma` relative to `frame`.
    pub value: T,
    pub frame: Frame<T>,
}

/// Natural frame of `(nu, t)` with `cos(theta) = nu·t` and `sin(theta) >= 0`.
/// When `t` is parallel to `nu`, `f2` is the projection of the standard
/// basis vector least aligned with `nu`.
pub fn natural_frame<T: Real>(dim: usize, nu: &[T; 3], t: &[T; 3]) -> (Frame<T>, T, T) {
    let c = vec3::dot(nu, t);
    let tan = vec3::axpy(t, -c, nu);
    let s = vec3::norm(&tan);
    let f2 = if s > unit_tol::<T>() * T::lit(10.0) {
        vec3::scale(&tan, T::one() / s)
    } else {
        let axis = (0..dim)
            .min_by(|&a, &b| nu[a].abs().partial_cmp(&nu[b].abs()).expect("finite normal"))
            .expect("dim >= 2");
        let e = vec3::unit(axis);
        let p = vec3::axpy(&e, -nu[axis], nu);
        vec3::normalized(&p).expect("least aligned axis is not parallel to nu")
    };
    let f3 = if dim == 3 {
        vec3::cross(nu, &f2)
    } else {
        vec3::zero()
    };
    (Frame { dim, f: [*nu, f2, f3] }, c, s)
}

fn frame_matrix<T: Real>(dim: usize, c: T, s: T) -> SymMatrix<T> {
    let mut m = SymMatrix::zeros(dim);
    m.set(0, 0, c);
    m.set(0, 1, s);
    m
}

/// Closed-form optimal boundary stress. Supported norms: `vec2`, `vecInf`
/// (relative to the natural frame) and `op2` in 2D, where the frame entry
/// `sigma_yy` is set to zero.
pub fn optimal_stress<T: Real>(problem: &TractionProblem<T>) -> Result<OptimalBC<T>> {
    match (problem.norm, problem.dim) {
        (NormKind::Vec2 | NormKind::VecInf, _) | (NormKind::Op2, 2) => {}
        (k, d) => {
            return Err(Error::Unsupported(format!(
                "no closed-form optimal stress for {k} in {d}D"
            )))
        }
    }
    let (frame, c, s) = natural_frame(problem.dim, &problem.nu, &problem.t);
    let fm = frame_matrix(problem.dim, c, s);
    let f2 = frame.f[1];
    let sigma = SymMatrix::outer(problem.dim, &problem.nu)
        .scale(c)
        .add(&SymMatrix::sym_outer(problem.dim, &problem.nu, &f2).scale(s));
    Ok(OptimalBC {
        sigma,
        value: norm(&fm, problem.norm),
        frame,
    })
}

/// Optimal stress for the traction `e_k` (`k` is a 0-based axis):
/// `sigma = -nu_k nu⊗nu + nu⊗e_k + e_k⊗nu`. The same matrix is optimal for
/// `vec2` and, relative to the natural frame, for `vecInf`.
pub fn optimal_stress_ek<T: Real>(nu: &[T], k: usize, norm_kind: NormKind) -> Result<OptimalBC<T>> {
    let dim = nu.len();
    if k >= dim {
        return Err(Error::InvalidSpec(format!("axis {k} out of range for {dim}D")));
    }
    let mut ek = vec![T::zero(); dim];
    ek[k] = T::one();
    let problem = TractionProblem::new(nu, &ek, norm_kind)?;
    let mut out = optimal_stress(&problem)?;
    let e = vec3::unit(k);
    out.sigma = SymMatrix::outer(dim, &problem.nu)
        .scale(-problem.nu[k])
        .add(&SymMatrix::sym_outer(dim, &problem.nu, &e));
    Ok(out)
}

fn free_slots(dim: usize) -> &'static [(usize, usize)] {
    if dim == 2 {
        &[(1, 1)]
    } else {
        &[(1, 1), (1, 2), (2, 2)]
    }
}

/// Minimises `problem.norm` over every symmetric matrix with `sigma nu = t`
/// by nested grid search over the free frame components (`sigma_22` in 2D;
/// `sigma_22, sigma_23, sigma_33` in 3D). The first level covers `[-4, 4]`
/// with `resolution` points per axis; three refinements each shrink the box
/// tenfold around the incumbent. Ties go to the smallest free components.
pub fn brute_force_optimal<T: Real>(problem: &TractionProblem<T>, resolution: usize) -> Result<OptimalBC<T>> {
    if resolution < 3 {
        return Err(Error::InvalidSpec("resolution must be at least 3".into()));
    }
    let dim = problem.dim;
    let (frame, c, s) = natural_frame(dim, &problem.nu, &problem.t);
    let base = frame_matrix(dim, c, s);
    let slots = free_slots(dim);
    let m = slots.len();
    let eval = |x: &[T]| {
        let mut fm = base;
        for (&(i, j), &v) in slots.iter().zip(x) {
            fm.set(i, j, v);
        }
        (norm(&fm, problem.norm), x.iter().map(|v| *v * *v).sum::<T>())
    };

    let tie = T::lit(1e-12).max(T::epsilon() * T::lit(16.0));
    let mut centre = vec![T::zero(); m];
    let mut half = T::lit(4.0);
    let r = resolution as i64;
    let mut best = (T::infinity(), T::infinity());
    let mut best_x = centre.clone();
    for _level in 0..4 {
        let step = half * T::lit(2.0) / T::from_i64(r - 1).expect("resolution");
        let total = (resolution as u64).pow(m as u32);
        let mut x = vec![T::zero(); m];
        for idx in 0..total {
            let mut rem = idx;
            for (a, xa) in x.iter_mut().enumerate() {
                let k = (rem % resolution as u64) as i64 - (r - 1) / 2;
                rem /= resolution as u64;
                *xa = centre[a] + T::from_i64(k).expect("index") * step;
            }
            let cand = eval(&x);
            let better = cand.0 < best.0 - tie
                || ((cand.0 - best.0).abs() <= tie && cand.1 < best.1);
            if better {
                best = cand;
                best_x.clone_from(&x);
            }
        }
        centre.clone_from(&best_x);
        half = half / T::lit(10.0);
    }
    let mut fm = base;
    for (&(i, j), &v) in slots.iter().zip(&best_x) {
        fm.set(i, j, v);
    }
    Ok(OptimalBC {
        sigma: frame.to_standard(&fm),
        value: best.0,
        frame,
    })
}

/// Traction at inclination `theta` from `nu = e_1`, turning towards `e_2`.
pub fn inclined_problem<T: Real>(dim: usize, theta: T, norm_kind: NormKind) -> Result<TractionProblem<T>> {
    let mut nu = vec![T::zero(); dim];
    nu[0] = T::one();
    let mut t = vec![T::zero(); dim];
    t[0] = theta.cos();
    t[1] = theta.sin();
    TractionProblem::new(&nu, &t, norm_kind)
}

/// One sample of a `theta` sweep comparing the closed form with brute force.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub theta: f64,
    pub closed_value: f64,
    pub brute_value: f64,
    /// Largest entrywise difference of the two standard-basis matrices.
    pub max_entry_diff: f64,
    pub closed_sigma: Vec<f64>,
    pub brute_sigma: Vec<f64>,
}

/// `steps` equally spaced inclinations in `[0, pi/2]` (both ends included).
pub fn theta_sweep(norm_kind: NormKind, dim: usize, steps: usize, resolution: usize) -> Result<Vec<SweepRow>> {
    if steps < 2 {
        return Err(Error::InvalidSpec("sweep needs at least 2 steps".into()));
    }
    (0..steps)
        .map(|i| {
            let theta = std::f64::consts::FRAC_PI_2 * i as f64 / (steps - 1) as f64;
            let p = inclined_problem::<f64>(dim, theta, norm_kind)?;
            let closed = optimal_stress(&p)?;
            let brute = brute_force_optimal(&p, resolution)?;
            let cs = closed.sigma.upper();
            let bs = brute.sigma.upper();
            let diff = cs
                .iter()
                .zip(&bs)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            Ok(SweepRow {
                theta,
                closed_value: closed.value,
                brute_value: brute.value,
                max_entry_diff: diff,
                closed_sigma: cs,
                brute_sigma: bs,
            })
        })
        .collect()
}

/// Worst case over unit tractions of the optimal stress norm, from the
/// closed form sampled at 91 inclinations in `[0, pi/2]`.
pub fn worst_case_d<T: Real>(norm_kind: NormKind, dim: usize) -> Result<T> {
    if !matches!(norm_kind, NormKind::Vec2 | NormKind::VecInf) {
        return Err(Error::Unsupported(format!("worst case constant for {norm_kind}")));
    }
    let steps = 91;
    let mut d = T::zero();
    for i in 0..steps {
        let theta = T::FRAC_PI_2() * T::from_usize_lossy(i) / T::from_usize_lossy(steps - 1);
        let p = inclined_problem(dim, theta, norm_kind)?;
        d = d.max(optimal_stress(&p)?.value);
    }
    Ok(d)
}

/// `T^k` at every boundary node of `domain` (`k` 0-based).
pub fn ek_boundary_tensor<T: Real>(domain: &Domain<T>, k: usize) -> Result<Vec<SymMatrix<T>>> {
    let dim = domain.dim();
    domain
        .boundary_nodes()
        .iter()
        .map(|b| optimal_stress_ek(&b.normal[..dim], k, NormKind::Vec2).map(|o| o.sigma))
        .collect()
}

/// Pointwise optimal values `|T^k|` along the boundary for `norm_kind`,
/// relative to each node's natural frame.
pub fn ek_boundary_values<T: Real>(domain: &Domain<T>, k: usize, norm_kind: NormKind) -> Result<Vec<T>> {
    let dim = domain.dim();
    domain
        .boundary_nodes()
        .iter()
        .map(|b| optimal_stress_ek(&b.normal[..dim], k, norm_kind).map(|o| o.value))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, DomainSpec};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, SQRT_2};

    fn residual(sigma: &SymMatrix<f64>, nu: &[f64; 3], t: &[f64; 3]) -> f64 {
        let r = vec3::sub(&sigma.apply(nu), t);
        vec3::norm(&r)
    }

    fn max_diff(a: &SymMatrix<f64>, b: &SymMatrix<f64>) -> f64 {
        a.upper()
            .iter()
            .zip(b.upper())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn parallel_traction_gives_projector() {
        let nu = [0.6, 0.0, 0.8];
        let p = TractionProblem::new(&nu, &nu, NormKind::Vec2).unwrap();
        let o = optimal_stress(&p).unwrap();
        assert!(max_diff(&o.sigma, &SymMatrix::outer(3, &nu)) < 1e-15);
        assert_relative_eq!(o.value, 1.0);
    }

    #[test]
    fn perpendicular_traction_gives_sqrt2() {
        let p = TractionProblem::new(&[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0], NormKind::Vec2).unwrap();
        assert_relative_eq!(optimal_stress(&p).unwrap().value, SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn vecinf_at_quarter_pi() {
        let p = inclined_problem(3, FRAC_PI_4, NormKind::VecInf).unwrap();
        assert_relative_eq!(optimal_stress(&p).unwrap().value, 0.5f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn rejects_unsupported_and_non_unit() {
        let p = inclined_problem::<f64>(3, 0.3, NormKind::Op2).unwrap();
        assert!(matches!(optimal_stress(&p), Err(Error::Unsupported(_))));
        let p = inclined_problem::<f64>(2, 0.3, NormKind::Op1).unwrap();
        assert!(optimal_stress(&p).is_err());
        assert!(TractionProblem::new(&[1.0, 0.1], &[1.0, 0.0], NormKind::Vec2).is_err());
        assert!(TractionProblem::new(&[1.0, 0.0], &[1.0, 0.0, 0.0], NormKind::Vec2).is_err());
        assert!(worst_case_d::<f64>(NormKind::Op1, 3).is_err());
        assert!(optimal_stress_ek(&[1.0, 0.0], 2, NormKind::Vec2).is_err());
    }

    #[test]
    fn ek_examples() {
        let o = optimal_stress_ek(&[0.0, 1.0, 0.0], 1, NormKind::Vec2).unwrap();
        assert!(max_diff(&o.sigma, &SymMatrix::outer(3, &[0.0, 1.0, 0.0])) < 1e-15);
        assert_relative_eq!(o.value, 1.0);

        let o = optimal_stress_ek(&[0.0, 1.0, 0.0], 0, NormKind::Vec2).unwrap();
        assert_relative_eq!(o.value, SQRT_2, epsilon = 1e-15);

        let r = 1.0 / 3f64.sqrt();
        let nu = [r, r, r];
        let o = optimal_stress_ek(&nu, 0, NormKind::Vec2).unwrap();
        assert!(residual(&o.sigma, &nu, &[1.0, 0.0, 0.0]) < 1e-12);
        assert_relative_eq!(o.value, (2.0 - 1.0 / 3.0f64).sqrt(), epsilon = 1e-14);
        // vec2 is frame independent, so the standard entries give the same value
        assert_relative_eq!(norm(&o.sigma, NormKind::Vec2), o.value, epsilon = 1e-14);

        let o = optimal_stress_ek(&nu, 0, NormKind::VecInf).unwrap();
        assert_relative_eq!(o.value, r.max((1.0 - r * r).sqrt()), epsilon = 1e-14);
    }

    #[test]
    fn ek_matches_general_construction() {
        let nu = [0.48, -0.6, 0.64];
        for k in 0..3 {
            let o = optimal_stress_ek(&nu, k, NormKind::Vec2).unwrap();
            let mut e = [0.0; 3];
            e[k] = 1.0;
            let g = optimal_stress(&TractionProblem::new(&nu, &e, NormKind::Vec2).unwrap()).unwrap();
            assert!(max_diff(&o.sigma, &g.sigma) < 1e-14);
        }
    }

    #[test]
    fn brute_force_examples() {
        let p = inclined_problem(3, FRAC_PI_2, NormKind::Vec2).unwrap();
        let b = brute_force_optimal(&p, 21).unwrap();
        assert!(max_diff(&b.sigma, &optimal_stress(&p).unwrap().sigma) < 1e-3);

        let nu = [0.0, 0.6, 0.8];
        let p = TractionProblem::new(&nu, &nu, NormKind::Vec2).unwrap();
        let b = brute_force_optimal(&p, 21).unwrap();
        assert!(max_diff(&b.sigma, &SymMatrix::outer(3, &nu)) < 1e-3);
    }

    #[test]
    fn spectral_norm_minimiser_in_2d() {
        // |sigma|_o2 >= |sigma nu| = 1, and the traceless matrix
        // [[c, s], [s, -c]] has eigenvalues ±1, so the minimiser is -c
        let th = FRAC_PI_3;
        let p = inclined_problem(2, th, NormKind::Op2).unwrap();
        let b = brute_force_optimal(&p, 21).unwrap();
        let free = b.frame.to_frame(&b.sigma).get(1, 1);
        assert!((free + th.cos()).abs() < 1e-3, "free component {free}");
        assert!((b.value - 1.0).abs() < 1e-6);
        // the frame construction with sigma_yy = 0 sits above that minimum
        let c = optimal_stress(&p).unwrap();
        let expected = th.cos() / 2.0 + (1.0 - 0.75 * th.cos().powi(2)).sqrt();
        assert_relative_eq!(c.value, expected, epsilon = 1e-14);
        assert!(c.value > b.value);
    }

    #[test]
    fn worst_case_constants() {
        for dim in [2, 3] {
            assert_relative_eq!(worst_case_d::<f64>(NormKind::Vec2, dim).unwrap(), SQRT_2, epsilon = 1e-15);
            assert_eq!(worst_case_d::<f64>(NormKind::VecInf, dim).unwrap(), 1.0);
        }
    }

    #[test]
    fn vec2_sweep_maximum() {
        let rows = theta_sweep(NormKind::Vec2, 3, 91, 21).unwrap();
        let max = rows.iter().map(|r| r.brute_value).fold(0.0, f64::max);
        assert!(max <= SQRT_2 + 1e-12 && max >= SQRT_2 - 1e-3);
        assert!(rows.iter().all(|r| r.max_entry_diff < 1e-3));
    }

    #[test]
    fn sphere_boundary_tensors() {
        let d = build_domain(&DomainSpec::<f64>::ball(1.0, 0.1)).unwrap();
        let vals = ek_boundary_values(&d, 0, NormKind::Vec2).unwrap();
        let sup = vals.iter().copied().fold(0.0, f64::max);
        assert!((sup - SQRT_2).abs() < 1e-2, "{sup}");
        for (b, t) in d.boundary_nodes().iter().zip(ek_boundary_tensor(&d, 0).unwrap()) {
            assert!(residual(&t, &b.normal, &[1.0, 0.0, 0.0]) < 1e-12);
        }
    }

    #[test]
    fn circle_boundary_tensors() {
        let d = build_domain(&DomainSpec::<f64>::disk(1.0, 0.05)).unwrap();
        let ts = ek_boundary_tensor(&d, 1).unwrap();
        for (b, t) in d.boundary_nodes().iter().zip(&ts) {
            assert!(residual(t, &b.normal, &[0.0, 1.0, 0.0]) < 1e-12);
            if (b.normal[0] - 1.0).abs() < 1e-15 {
                let shear = SymMatrix::sym_outer(2, &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]);
                assert!(max_diff(t, &shear) < 1e-12);
            }
        }
        let e1 = optimal_stress_ek(&[1.0, 0.0], 0, NormKind::Vec2).unwrap();
        assert!(max_diff(&e1.sigma, &SymMatrix::outer(2, &[1.0, 0.0, 0.0])) < 1e-15);
        assert!(ek_boundary_tensor(&d, 2).is_err());
    }

    #[test]
    fn shared_normal_gives_shared_tensor() {
        let disk = build_domain(&DomainSpec::<f64>::disk(1.0, 0.1)).unwrap();
        let ellipse = build_domain(&DomainSpec::<f64>::ellipse(1.0, 2.0, 0.1)).unwrap();
        // (1, 0) lies on both boundaries with normal e_1
        let pick = |d: &Domain<f64>| {
            let i = d
                .boundary_nodes()
                .iter()
                .position(|b| (b.position[0] - 1.0).abs() < 1e-12 && b.position[1].abs() < 1e-12)
                .expect("node at (1, 0)");
            ek_boundary_tensor(d, 1).unwrap()[i]
        };
        assert_eq!(pick(&disk), pick(&ellipse));
    }

    fn unit3() -> impl Strategy<Value = [f64; 3]> {
        (0.0f64..std::f64::consts::PI, 0.0f64..std::f64::consts::TAU).prop_map(|(a, b)| {
            [a.sin() * b.cos(), a.sin() * b.sin(), a.cos()]
        })
    }

    fn rotate_about(axis: &[f64; 3], v: &[f64; 3], phi: f64) -> [f64; 3] {
        // Rodrigues
        let k = axis;
        let kv = vec3::cross(k, v);
        let kd = vec3::dot(k, v);
        let mut out = [0.0; 3];
        for i in 0..3 {
            out[i] = v[i] * phi.cos() + kv[i] * phi.sin() + k[i] * kd * (1.0 - phi.cos());
        }
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn compatibility(nu in unit3(), t in unit3()) {
            for kind in [NormKind::Vec2, NormKind::VecInf] {
                let p = TractionProblem::new(&nu, &t, kind).unwrap();
                let o = optimal_stress(&p).unwrap();
                prop_assert!(residual(&o.sigma, &nu, &t) < 1e-12);
            }
            for k in 0..3 {
                let o = optimal_stress_ek(&nu, k, NormKind::Vec2).unwrap();
                let mut e = [0.0; 3];
                e[k] = 1.0;
                prop_assert!(residual(&o.sigma, &nu, &e) < 1e-12);
            }
        }

        #[test]
        fn closed_form_agrees_with_brute_force(nu in unit3(), t in unit3()) {
            for kind in [NormKind::Vec2, NormKind::VecInf] {
                let p = TractionProblem::new(&nu, &t, kind).unwrap();
                let c = optimal_stress(&p).unwrap();
                let b = brute_force_optimal(&p, 21).unwrap();
                prop_assert!((c.value - b.value).abs() <= 1e-3, "{kind}: {} vs {}", c.value, b.value);
                prop_assert!(max_diff(&c.sigma, &b.sigma) < 1e-3);
            }
        }

        #[test]
        fn vec2_independent_of_f3(nu in unit3(), t in unit3()) {
            let p = TractionProblem::new(&nu, &t, NormKind::Vec2).unwrap();
            let o = optimal_stress(&p).unwrap();
            let s = o.frame.to_frame(&o.sigma);
            let mut alt = o.frame;
            alt.f[2] = vec3::scale(&o.frame.f[2], -1.0);
            prop_assert!(max_diff(&alt.to_standard(&s), &o.sigma) < 1e-12);
        }

        #[test]
        fn vec2_value_depends_on_angle_only(nu in unit3(), t in unit3(), phi in 0.0f64..6.3) {
            let p = TractionProblem::new(&nu, &t, NormKind::Vec2).unwrap();
            let v = optimal_stress(&p).unwrap().value;
            // rotate the pair rigidly: the angle is preserved
            let axis = vec3::normalized(&[0.3, -0.5, 0.8]).unwrap();
            let nu2 = rotate_about(&axis, &nu, phi);
            let t2 = rotate_about(&axis, &t, phi);
            let p2 = TractionProblem::new(&nu2, &t2, NormKind::Vec2).unwrap();
            prop_assert!((optimal_stress(&p2).unwrap().value - v).abs() < 1e-12);
        }
    }
}
