//! Fields of bounded deformation: strain, rigid fields, the LD norm and the
//! trace bounds
//!
//! ```text
//! ∫_∂Ω |w| <= A ‖ε(w)‖_1 + B ‖w‖_1,   A = n D,   B = Σ_k sup_∂Ω |div σ^k|
//! ```
//!
//! where `σ^k` is the harmonic extension of the `e_k`-optimal boundary
//! tensor `T^k` and `D` the worst-case optimal stress constant of the norm.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::laplace::{
    check_max_principle, gradient, sup_norm, sym_index, DirichletSolver, Region, ScalarField,
    SymTensorField, VectorField,
};
use crate::matnorm::{NormKind, SymMatrix};
use crate::optimal_bc::{ek_boundary_tensor, ek_boundary_values, worst_case_d};
use crate::scalar::{vec3, Real};
use crate::sobolev::{integrate, IdentityCheck, TraceReport};

/// `w(x) = a + b × x`. In 2D only `b[2]` is used: `w = a + b_z (-y, x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RigidField<T> {
    pub dim: usize,
    pub a: [T; 3],
    pub b: [T; 3],
}

impl<T: Real> RigidField<T> {
    pub fn new(dim: usize, a: [T; 3], b: [T; 3]) -> Self {
        let mut r = Self { dim, a, b };
        if dim == 2 {
            r.a[2] = T::zero();
            r.b[0] = T::zero();
            r.b[1] = T::zero();
        }
        r
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, [T::zero(); 3], [T::zero(); 3])
    }

    pub fn eval(&self, x: &[T; 3]) -> [T; 3] {
        let mut w = vec3::add(&self.a, &vec3::cross(&self.b, x));
        if self.dim == 2 {
            w[2] = T::zero();
        }
        w
    }

    pub fn to_field(&self, domain: &Domain<T>) -> VectorField<T> {
        VectorField::from_fn(domain, |p| self.eval(p))
    }
}

/// `ε_ij = (∂_j w_i + ∂_i w_j) / 2`.
pub fn strain<T: Real>(domain: &Domain<T>, w: &VectorField<T>) -> Result<SymTensorField<T>> {
    let dim = domain.dim();
    if w.dim() != dim {
        return Err(Error::LengthMismatch {
            expected: dim,
            got: w.dim(),
        });
    }
    let grads: Vec<VectorField<T>> = w
        .components
        .iter()
        .map(|c| gradient(domain, c))
        .collect::<Result<_>>()?;
    let half = T::lit(0.5);
    let mut out = SymTensorField::zeros(domain);
    for i in 0..dim {
        for j in i..dim {
            *out.component_mut(i, j) = grads[i].components[j]
                .zip_with(&grads[j].components[i], |a, b| half * (a + b));
        }
    }
    Ok(out)
}

/// Weighted quadrature over a node subset: the volume rule for `Interior`
/// and `Closure`, the surface rule for `Boundary`.
fn quadrature<T: Real>(domain: &Domain<T>, region: Region) -> (Vec<[T; 3]>, Vec<T>, Vec<usize>, Vec<usize>) {
    match region {
        Region::Boundary => (
            domain.boundary_nodes().iter().map(|b| b.position).collect(),
            domain.boundary_nodes().iter().map(|b| b.weight).collect(),
            Vec::new(),
            (0..domain.boundary_len()).collect(),
        ),
        Region::Interior | Region::Closure => {
            let mut pts: Vec<[T; 3]> = (0..domain.interior_len())
                .map(|k| domain.interior_position(k))
                .collect();
            pts.extend(domain.boundary_nodes().iter().map(|b| b.position));
            let mut w = domain.interior_weights().to_vec();
            w.extend_from_slice(domain.boundary_volume_weights());
            (
                pts,
                w,
                (0..domain.interior_len()).collect(),
                (0..domain.boundary_len()).collect(),
            )
        }
    }
}

/// L² projection onto rigid fields over `region`:
/// `a` is the mean of `w` and `b = I^{-1} ∫ (x - c) × w` with `I` the
/// moment of inertia about the centroid `c`.
pub fn rigid_projection<T: Real>(domain: &Domain<T>, w: &VectorField<T>, region: Region) -> Result<RigidField<T>> {
    let dim = domain.dim();
    if w.dim() != dim {
        return Err(Error::LengthMismatch {
            expected: dim,
            got: w.dim(),
        });
    }
    for c in &w.components {
        if !c.is_finite() {
            return Err(Error::NonFinite("vector field"));
        }
    }
    let (pts, wts, ins, bnd) = quadrature(domain, region);
    let vals: Vec<[T; 3]> = ins
        .iter()
        .map(|&k| {
            let mut v = [T::zero(); 3];
            for (i, c) in w.components.iter().enumerate() {
                v[i] = c.interior[k];
            }
            v
        })
        .chain(bnd.iter().map(|&b| {
            let mut v = [T::zero(); 3];
            for (i, c) in w.components.iter().enumerate() {
                v[i] = c.boundary[b];
            }
            v
        }))
        .collect();
    let measure: T = wts.iter().copied().sum();
    if !(measure > T::zero()) {
        return Err(Error::EmptyRegion);
    }
    let mut centroid = [T::zero(); 3];
    let mut mean = [T::zero(); 3];
    for ((p, v), &wt) in pts.iter().zip(&vals).zip(&wts) {
        centroid = vec3::axpy(&centroid, wt, p);
        mean = vec3::axpy(&mean, wt, v);
    }
    centroid = vec3::scale(&centroid, T::one() / measure);
    mean = vec3::scale(&mean, T::one() / measure);

    let mut inertia = [[T::zero(); 3]; 3];
    let mut torque = [T::zero(); 3];
    for ((p, v), &wt) in pts.iter().zip(&vals).zip(&wts) {
        let x = vec3::sub(p, &centroid);
        let r2 = vec3::dot(&x, &x);
        for i in 0..3 {
            for m in 0..3 {
                let d = if i == m { r2 } else { T::zero() };
                inertia[i][m] += wt * (d - x[i] * x[m]);
            }
        }
        torque = vec3::axpy(&torque, wt, &vec3::cross(&x, v));
    }
    let scale = inertia[0][0] + inertia[1][1] + inertia[2][2];
    let tiny = T::epsilon() * T::lit(1e3) * scale;
    let b = if dim == 2 {
        // planar moment about the z axis
        let iz = inertia[2][2];
        if !(iz > tiny) {
            return Err(Error::SingularInertia);
        }
        [T::zero(), T::zero(), torque[2] / iz]
    } else {
        let im = SymMatrix::from_fn(3, |i, j| inertia[i][j]);
        let det = im.determinant();
        if !(det.abs() > tiny * scale * scale) {
            return Err(Error::SingularInertia);
        }
        solve3(&inertia, &torque, det)
    };
    // w_R(x) = mean + b × (x - c)
    let a = vec3::sub(&mean, &vec3::cross(&b, &centroid));
    Ok(RigidField::new(dim, a, b))
}

/// Cramer's rule for a 3x3 system with known determinant.
fn solve3<T: Real>(m: &[[T; 3]; 3], r: &[T; 3], det: T) -> [T; 3] {
    let col = |c: usize| {
        let mut a = *m;
        for i in 0..3 {
            a[i][c] = r[i];
        }
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    [col(0) / det, col(1) / det, col(2) / det]
}

/// `Σ_i ∫|w_i|`
pub fn l1_norm<T: Real>(domain: &Domain<T>, w: &VectorField<T>) -> Result<T> {
    integrate(domain, &w.abs_sum())
}

/// `Σ_{i,m} ∫|ε_im|` over all ordered index pairs.
pub fn strain_l1_norm<T: Real>(domain: &Domain<T>, eps: &SymTensorField<T>) -> Result<T> {
    let dim = eps.dim;
    let mut total = T::zero();
    for i in 0..dim {
        for j in i..dim {
            let v = integrate(domain, &eps.component(i, j).abs())?;
            total += if i == j { v } else { v + v };
        }
    }
    Ok(total)
}

/// `‖w‖_1 + ‖ε(w)‖_1`
pub fn ld_norm<T: Real>(domain: &Domain<T>, w: &VectorField<T>) -> Result<T> {
    Ok(l1_norm(domain, w)? + strain_l1_norm(domain, &strain(domain, w)?)?)
}

/// Harmonic extension `σ^k` of the `e_k`-optimal boundary tensor.
#[derive(Debug, Clone)]
pub struct EkTensor<T> {
    /// 0-based axis.
    pub k: usize,
    pub sigma: SymTensorField<T>,
    /// Row divergence `σ_ij,j`.
    pub divergence: VectorField<T>,
    /// `sup_∂Ω max_i |σ_ij,j|`
    pub sup_div_boundary: T,
    pub sup_div_closure: T,
    /// Largest absolute standard-basis entry over the closure.
    pub max_entry_closure: T,
    pub max_entry_boundary: T,
    /// `max |σ ν - e_k|` over boundary nodes.
    pub compatibility_residual: T,
}

fn boundary_data<T: Real>(domain: &Domain<T>, k: usize) -> Result<Vec<Vec<T>>> {
    let dim = domain.dim();
    let tensors = ek_boundary_tensor(domain, k)?;
    let mut data = Vec::with_capacity(dim * (dim + 1) / 2);
    for i in 0..dim {
        for j in i..dim {
            data.push(tensors.iter().map(|t| t.get(i, j)).collect());
        }
    }
    Ok(data)
}

fn assemble_ek<T: Real>(domain: &Domain<T>, k: usize, components: Vec<ScalarField<T>>) -> Result<EkTensor<T>> {
    let dim = domain.dim();
    let h = domain.h();
    let sigma = SymTensorField { dim, components };
    let tol = T::lit(1e-8) + T::lit(5.0) * h;
    for c in &sigma.components {
        check_max_principle(c, tol)?;
    }
    let divergence = sigma.divergence(domain)?;
    let div_max = divergence.abs_max();
    let sup_b = sup_norm(&div_max, Region::Boundary)?;
    let sup_c = sup_norm(&div_max, Region::Closure)?;
    if sup_c > sup_b * (T::one() + T::lit(10.0) * h) {
        return Err(Error::MaxPrincipleViolated {
            interior: sup_c.as_f64(),
            boundary: sup_b.as_f64(),
        });
    }
    let entries = sigma.abs_max();
    let mut compat = T::zero();
    for (bi, b) in domain.boundary_nodes().iter().enumerate() {
        for i in 0..dim {
            let s: T = (0..dim)
                .map(|j| sigma.components[sym_index(dim, i, j)].boundary[bi] * b.normal[j])
                .sum();
            let e = if i == k { T::one() } else { T::zero() };
            compat = compat.max((s - e).abs());
        }
    }
    Ok(EkTensor {
        k,
        max_entry_closure: sup_norm(&entries, Region::Closure)?,
        max_entry_boundary: sup_norm(&entries, Region::Boundary)?,
        sigma,
        divergence,
        sup_div_boundary: sup_b,
        sup_div_closure: sup_c,
        compatibility_residual: compat,
    })
}

/// Solves one Dirichlet problem per tensor component with data `T^k`.
/// Checks the component-wise maximum principle and that the divergence
/// sup over the closure stays within `10h` (relative) of its boundary sup.
pub fn harmonic_ek_tensor<T: Real>(domain: &Domain<T>, k: usize) -> Result<EkTensor<T>> {
    let data = boundary_data(domain, k)?;
    let comps = DirichletSolver::new(domain).solve_many(&data)?;
    assemble_ek(domain, k, comps)
}

/// All `σ^k`, `k = 0..dim`, from a single batch of concurrent solves.
pub fn harmonic_ek_tensors<T: Real>(domain: &Domain<T>) -> Result<Vec<EkTensor<T>>> {
    let dim = domain.dim();
    let per = dim * (dim + 1) / 2;
    let mut data = Vec::with_capacity(dim * per);
    for k in 0..dim {
        data.extend(boundary_data(domain, k)?);
    }
    let mut comps = DirichletSolver::new(domain).solve_many(&data)?;
    let mut out = Vec::with_capacity(dim);
    for k in 0..dim {
        let rest = comps.split_off(per);
        out.push(assemble_ek(domain, k, comps)?);
        comps = rest;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerK<T> {
    /// 1-based axis index.
    pub k: usize,
    pub sup_div_boundary: T,
    pub sup_div_closure: T,
    pub max_entry_closure: T,
    pub max_entry_boundary: T,
    /// `sup_∂Ω |T^k|` in the chosen norm, relative to the natural frame.
    pub boundary_norm_sup: T,
    pub compatibility_residual: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LdBoundReport<T> {
    pub norm: NormKind,
    pub dim: usize,
    /// The constants are stated for n = 3; other dimensions use `A = n D`.
    pub dimension_adapted: bool,
    pub h: T,
    pub d: T,
    pub a: T,
    pub b: T,
    pub per_k: Vec<PerK<T>>,
    /// `max(A, B)`, a bound for the trace norm and for its quotient by
    /// rigid fields.
    pub trace_norm_bound: T,
}

/// `A = n D` and `B = Σ_k sup_∂Ω |div σ^k|` (max over components).
pub fn ld_bounds<T: Real>(domain: &Domain<T>, norm_kind: NormKind) -> Result<LdBoundReport<T>> {
    worst_case_d::<T>(norm_kind, domain.dim())?;
    ld_bounds_from(domain, norm_kind, &harmonic_ek_tensors(domain)?)
}

/// [`ld_bounds`] from already computed harmonic `e_k` tensors.
pub fn ld_bounds_from<T: Real>(domain: &Domain<T>, norm_kind: NormKind, tensors: &[EkTensor<T>]) -> Result<LdBoundReport<T>> {
    let dim = domain.dim();
    if tensors.len() != dim {
        return Err(Error::LengthMismatch {
            expected: dim,
            got: tensors.len(),
        });
    }
    let d = worst_case_d::<T>(norm_kind, dim)?;
    let a = T::from_usize_lossy(dim) * d;
    let mut b = T::zero();
    let mut per_k = Vec::with_capacity(dim);
    for t in tensors {
        b += t.sup_div_boundary;
        let vals = ek_boundary_values(domain, t.k, norm_kind)?;
        per_k.push(PerK {
            k: t.k + 1,
            sup_div_boundary: t.sup_div_boundary,
            sup_div_closure: t.sup_div_closure,
            max_entry_closure: t.max_entry_closure,
            max_entry_boundary: t.max_entry_boundary,
            boundary_norm_sup: vals.into_iter().fold(T::zero(), T::max),
            compatibility_residual: t.compatibility_residual,
        });
    }
    Ok(LdBoundReport {
        norm: norm_kind,
        dim,
        dimension_adapted: dim != 3,
        h: domain.h(),
        d,
        a,
        b,
        per_k,
        trace_norm_bound: a.max(b),
    })
}

/// `∫_∂Ω Σ|w_i|` against `A ‖ε(w)‖_1 + B ‖w‖_1`.
pub fn verify_ld_trace_inequality<T: Real>(
    domain: &Domain<T>,
    w: &VectorField<T>,
    report: &LdBoundReport<T>,
) -> Result<TraceReport<T>> {
    let lhs = domain.integrate_boundary(&w.abs_sum().boundary)?;
    let eps = strain(domain, w)?;
    let grad_term = report.a * strain_l1_norm(domain, &eps)?;
    let mass_term = report.b * l1_norm(domain, w)?;
    Ok(TraceReport::new(lhs, grad_term, mass_term, report.b, domain.h()))
}

/// Two sides of `∫_Ω σ_ij ε_ij = ∫_∂Ω σ_ij w_i ν_j - ∫_Ω σ_ij,j w_i`.
pub fn virtual_work_residual<T: Real>(
    domain: &Domain<T>,
    sigma: &SymTensorField<T>,
    w: &VectorField<T>,
) -> Result<IdentityCheck<T>> {
    let dim = domain.dim();
    if sigma.dim != dim || w.dim() != dim {
        return Err(Error::LengthMismatch {
            expected: dim,
            got: w.dim(),
        });
    }
    let eps = strain(domain, w)?;
    let mut work = ScalarField::zeros(domain);
    for i in 0..dim {
        for j in 0..dim {
            let prod = sigma.component(i, j).zip_with(eps.component(i, j), |a, b| a * b);
            work = work.zip_with(&prod, |a, b| a + b);
        }
    }
    let lhs = integrate(domain, &work)?;

    let traction: Vec<T> = domain
        .boundary_nodes()
        .iter()
        .enumerate()
        .map(|(bi, b)| {
            let mut s = T::zero();
            for i in 0..dim {
                for j in 0..dim {
                    s += sigma.component(i, j).boundary[bi] * w.components[i].boundary[bi] * b.normal[j];
                }
            }
            s
        })
        .collect();
    let t1 = domain.integrate_boundary(&traction)?;
    let div = sigma.divergence(domain)?;
    let mut body = ScalarField::zeros(domain);
    for (d, wi) in div.components.iter().zip(&w.components) {
        body = body.zip_with(&d.zip_with(wi, |a, b| a * b), |a, b| a + b);
    }
    let t2 = integrate(domain, &body)?;
    let rhs = t1 - t2;
    let abs_traction: Vec<T> = traction.iter().map(|v| v.abs()).collect();
    let mags = [
        integrate(domain, &work.abs())?,
        domain.integrate_boundary(&abs_traction)?,
        integrate(domain, &body.abs())?,
    ];
    Ok(IdentityCheck::new(lhs, rhs, &mags, domain.h()))
}

/// A named vector test field.
pub struct VectorBatteryField<T> {
    pub name: &'static str,
    pub f: Box<dyn Fn(&[T; 3]) -> [T; 3] + Send + Sync>,
}

/// Rigid, general linear, pure shear, radial and sign-changing fields.
pub fn ld_battery<T: Real>(dim: usize) -> Vec<VectorBatteryField<T>> {
    let lit = T::lit;
    let mask = move |mut v: [T; 3]| {
        if dim == 2 {
            v[2] = T::zero();
        }
        v
    };
    let rigid = RigidField::new(dim, [lit(0.3), lit(-0.2), lit(0.1)], [lit(0.4), lit(-0.5), lit(1.0)]);
    vec![
        VectorBatteryField {
            name: "rigid",
            f: Box::new(move |p| rigid.eval(p)),
        },
        VectorBatteryField {
            name: "linear",
            f: Box::new(move |p| {
                mask([
                    p[0] + lit(0.5) * p[1] - lit(0.2) * p[2],
                    lit(-0.3) * p[0] + lit(2.0) * p[1] + lit(0.1),
                    lit(0.7) * p[2] + lit(0.4) * p[0],
                ])
            }),
        },
        VectorBatteryField {
            name: "shear",
            f: Box::new(move |p| [p[1], T::zero(), T::zero()]),
        },
        VectorBatteryField {
            name: "radial",
            f: Box::new(move |p| {
                let r2 = vec3::dot(p, p);
                mask(vec3::scale(p, (-r2).exp()))
            }),
        },
        VectorBatteryField {
            name: "oscillating",
            f: Box::new(move |p| {
                mask([
                    (lit(3.0) * p[0]).sin() * (lit(2.0) * p[1]).cos(),
                    (lit(2.0) * p[0]).cos() * p[1].sin() - lit(0.2),
                    (p[0] * p[1]).sin() + p[2],
                ])
            }),
        },
    ]
}
