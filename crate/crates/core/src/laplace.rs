//! Discrete Dirichlet problems and difference operators on a [`Domain`].
//!
//! The Laplacian uses the Shortley-Weller stencil: at an interior node the
//! arm along each axis ends either at the neighbouring grid node (length `h`)
//! or at the boundary crossing on that edge (length `frac * h`), and
//!
//! ```text
//! u_xx ≈ 2/(hl + hr) * ((u_r - u_0)/hr - (u_0 - u_l)/hl)
//! ```
//!
//! The resulting matrix is a non-symmetric M-matrix, so the discrete
//! maximum principle holds for every solve.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{check_len, Arm, Domain, Target};
use crate::scalar::Real;

/// Nodal values on the closure of a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T> {
    pub interior: Vec<T>,
    pub boundary: Vec<T>,
}

/// `dim` scalar components sharing one domain.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField<T> {
    pub components: Vec<ScalarField<T>>,
}

/// Symmetric tensor field stored as its `dim(dim+1)/2` upper components.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensorField<T> {
    pub dim: usize,
    pub components: Vec<ScalarField<T>>,
}

/// Node subsets of a domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Interior,
    Boundary,
    Closure,
}

impl<T: Real> ScalarField<T> {
    pub fn zeros(domain: &Domain<T>) -> Self {
        Self::constant(domain, T::zero())
    }

    pub fn constant(domain: &Domain<T>, c: T) -> Self {
        Self {
            interior: vec![c; domain.interior_len()],
            boundary: vec![c; domain.boundary_len()],
        }
    }

    /// Samples `f` at every node position.
    pub fn from_fn(domain: &Domain<T>, f: impl Fn(&[T; 3]) -> T) -> Self {
        Self {
            interior: (0..domain.interior_len())
                .map(|k| f(&domain.interior_position(k)))
                .collect(),
            boundary: domain.boundary_nodes().iter().map(|b| f(&b.position)).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            interior: self.interior.iter().map(|&v| f(v)).collect(),
            boundary: self.boundary.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Node-wise combination of two fields on the same domain.
    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        Self {
            interior: self
                .interior
                .iter()
                .zip(&other.interior)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            boundary: self
                .boundary
                .iter()
                .zip(&other.boundary)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn abs(&self) -> Self {
        self.map(|v| v.abs())
    }

    #[inline]
    pub fn at(&self, target: Target) -> T {
        match target {
            Target::Interior(k) => self.interior[k as usize],
            Target::Boundary(b) => self.boundary[b as usize],
        }
    }

    pub fn values(&self, region: Region) -> Box<dyn Iterator<Item = T> + '_> {
        match region {
            Region::Interior => Box::new(self.interior.iter().copied()),
            Region::Boundary => Box::new(self.boundary.iter().copied()),
            Region::Closure => Box::new(self.interior.iter().chain(&self.boundary).copied()),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values(Region::Closure).all(|v| v.is_finite())
    }

    pub(crate) fn check(&self, domain: &Domain<T>) -> Result<()> {
        check_len(domain.interior_len(), self.interior.len())?;
        check_len(domain.boundary_len(), self.boundary.len())?;
        if !self.is_finite() {
            return Err(Error::NonFinite("field"));
        }
        Ok(())
    }
}

impl<T: Real> VectorField<T> {
    pub fn from_fn(domain: &Domain<T>, f: impl Fn(&[T; 3]) -> [T; 3]) -> Self {
        Self {
            components: (0..domain.dim())
                .map(|i| ScalarField::from_fn(domain, |p| f(p)[i]))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// Node-wise Euclidean length.
    pub fn magnitude(&self) -> ScalarField<T> {
        let mut acc = self.components[0].map(|v| v * v);
        for c in &self.components[1..] {
            acc = acc.zip_with(c, |a, v| a + v * v);
        }
        acc.map(|v| v.sqrt())
    }

    /// Node-wise sum of absolute components.
    pub fn abs_sum(&self) -> ScalarField<T> {
        let mut acc = self.components[0].abs();
        for c in &self.components[1..] {
            acc = acc.zip_with(c, |a, v| a + v.abs());
        }
        acc
    }

    /// Node-wise max of absolute components.
    pub fn abs_max(&self) -> ScalarField<T> {
        let mut acc = self.components[0].abs();
        for c in &self.components[1..] {
            acc = acc.zip_with(c, |a, v| a.max(v.abs()));
        }
        acc
    }
}

/// Position of `(i, j)` in the packed upper-triangular component list.
pub fn sym_index(dim: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    // rows 0..i hold dim, dim-1, ... entries
    i * dim - i * (i + 1) / 2 + j
}

impl<T: Real> SymTensorField<T> {
    pub fn zeros(domain: &Domain<T>) -> Self {
        let dim = domain.dim();
        Self {
            dim,
            components: vec![ScalarField::zeros(domain); dim * (dim + 1) / 2],
        }
    }

    pub fn component(&self, i: usize, j: usize) -> &ScalarField<T> {
        &self.components[sym_index(self.dim, i, j)]
    }

    pub fn component_mut(&mut self, i: usize, j: usize) -> &mut ScalarField<T> {
        &mut self.components[sym_index(self.dim, i, j)]
    }

    /// Row divergence `(σ_ij,j)_i`.
    pub fn divergence(&self, domain: &Domain<T>) -> Result<VectorField<T>> {
        let mut out = Vec::with_capacity(self.dim);
        for i in 0..self.dim {
            let mut acc = partial(domain, self.component(i, 0), 0)?;
            for j in 1..self.dim {
                let d = partial(domain, self.component(i, j), j)?;
                acc = acc.zip_with(&d, |a, b| a + b);
            }
            out.push(acc);
        }
        Ok(VectorField { components: out })
    }

    /// Node-wise max of absolute entries.
    pub fn abs_max(&self) -> ScalarField<T> {
        let mut acc = self.components[0].abs();
        for c in &self.components[1..] {
            acc = acc.zip_with(c, |a, v| a.max(v.abs()));
        }
        acc
    }
}

/// Linear solver controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions<T> {
    /// Relative residual of the diagonally scaled system.
    pub rel_tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::lit(1e-10).max(T::epsilon() * T::lit(100.0)),
            max_iter: 1_000_000,
        }
    }
}

/// The Shortley-Weller system of a domain, scaled to unit diagonal:
/// `u_p - Σ c_pq u_q = Σ c_pb g_b`.
#[derive(Debug, Clone)]
pub struct DirichletSolver<'a, T> {
    domain: &'a Domain<T>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<T>,
    bnd_ptr: Vec<usize>,
    bnd_cols: Vec<u32>,
    bnd_vals: Vec<T>,
    opts: SolverOptions<T>,
}

impl<'a, T: Real> DirichletSolver<'a, T> {
    pub fn new(domain: &'a Domain<T>) -> Self {
        Self::with_options(domain, SolverOptions::default())
    }

    pub fn with_options(domain: &'a Domain<T>, opts: SolverOptions<T>) -> Self {
        let n = domain.interior_len();
        let two = T::lit(2.0);
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut bnd_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(n * 2 * domain.dim());
        let mut vals = Vec::with_capacity(n * 2 * domain.dim());
        let mut bnd_cols = Vec::new();
        let mut bnd_vals = Vec::new();
        row_ptr.push(0);
        bnd_ptr.push(0);
        for k in 0..n {
            let mut diag = T::zero();
            let row_start = cols.len();
            let bnd_start = bnd_cols.len();
            for axis in 0..domain.dim() {
                let l = domain.arm(k, axis, -1);
                let r = domain.arm(k, axis, 1);
                diag += two / (l.len * r.len);
                for arm in [l, r] {
                    let c = two / ((l.len + r.len) * arm.len);
                    match arm.target {
                        Target::Interior(q) => {
                            cols.push(q);
                            vals.push(c);
                        }
                        Target::Boundary(b) => {
                            bnd_cols.push(b);
                            bnd_vals.push(c);
                        }
                    }
                }
            }
            for v in &mut vals[row_start..] {
                *v /= diag;
            }
            for v in &mut bnd_vals[bnd_start..] {
                *v /= diag;
            }
            row_ptr.push(cols.len());
            bnd_ptr.push(bnd_cols.len());
        }
        Self {
            domain,
            row_ptr,
            cols,
            vals,
            bnd_ptr,
            bnd_cols,
            bnd_vals,
            opts,
        }
    }

    fn apply(&self, x: &[T], out: &mut [T]) {
        for (k, o) in out.iter_mut().enumerate() {
            let mut s = x[k];
            for idx in self.row_ptr[k]..self.row_ptr[k + 1] {
                s -= self.vals[idx] * x[self.cols[idx] as usize];
            }
            *o = s;
        }
    }

    fn rhs(&self, data: &[T]) -> Vec<T> {
        (0..self.domain.interior_len())
            .map(|k| {
                (self.bnd_ptr[k]..self.bnd_ptr[k + 1])
                    .map(|idx| self.bnd_vals[idx] * data[self.bnd_cols[idx] as usize])
                    .sum()
            })
            .collect()
    }

    fn residual_norm(&self, x: &[T], b: &[T], scratch: &mut [T]) -> T {
        self.apply(x, scratch);
        norm2(scratch.iter().zip(b).map(|(ax, bb)| *bb - *ax))
    }

    /// Solves `Δu = 0` with `u = data` on the boundary nodes.
    pub fn solve(&self, data: &[T]) -> Result<ScalarField<T>> {
        check_len(self.domain.boundary_len(), data.len())?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("boundary data"));
        }
        let n = self.domain.interior_len();
        let b = self.rhs(data);
        let b_norm = norm2(b.iter().copied());
        // constant initial guess: exact for constant data
        let mean = data.iter().copied().sum::<T>() / T::from_usize_lossy(data.len().max(1));
        let mut x = vec![mean; n];
        if b_norm == T::zero() {
            x.iter_mut().for_each(|v| *v = T::zero());
        } else {
            let target = self.opts.rel_tol * b_norm;
            let mut iterations = 0usize;
            let converged = self.bicgstab(&b, &mut x, target, &mut iterations)
                || self.gauss_seidel(&b, &mut x, target, &mut iterations);
            if !converged {
                let mut scratch = vec![T::zero(); n];
                let res = self.residual_norm(&x, &b, &mut scratch) / b_norm;
                return Err(Error::SolverDiverged {
                    iterations,
                    residual: res.as_f64(),
                });
            }
        }
        Ok(ScalarField {
            interior: x,
            boundary: data.to_vec(),
        })
    }

    /// Solves several independent problems concurrently.
    pub fn solve_many(&self, data: &[Vec<T>]) -> Result<Vec<ScalarField<T>>> {
        data.par_iter().map(|d| self.solve(d)).collect()
    }

    fn bicgstab(&self, b: &[T], x: &mut [T], target: T, iterations: &mut usize) -> bool {
        let n = b.len();
        let mut r = vec![T::zero(); n];
        self.apply(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = *bi - *ri;
        }
        let mut restarts = 0;
        let mut v = vec![T::zero(); n];
        let mut p = vec![T::zero(); n];
        let mut s = vec![T::zero(); n];
        let mut t = vec![T::zero(); n];
        'outer: while restarts < 50 {
            if norm2(r.iter().copied()) <= target {
                return true;
            }
            let r_hat = r.clone();
            let (mut rho, mut alpha, mut omega) = (T::one(), T::one(), T::one());
            v.iter_mut().for_each(|e| *e = T::zero());
            p.iter_mut().for_each(|e| *e = T::zero());
            loop {
                if *iterations >= self.opts.max_iter {
                    return false;
                }
                *iterations += 1;
                let rho_new = dot(&r_hat, &r);
                if rho_new.abs() < T::min_positive_value() * T::lit(1e10) || omega == T::zero() {
                    restarts += 1;
                    self.refresh_residual(b, x, &mut r);
                    continue 'outer;
                }
                let beta = (rho_new / rho) * (alpha / omega);
                rho = rho_new;
                for i in 0..n {
                    p[i] = r[i] + beta * (p[i] - omega * v[i]);
                }
                self.apply(&p, &mut v);
                let rv = dot(&r_hat, &v);
                if rv == T::zero() {
                    restarts += 1;
                    self.refresh_residual(b, x, &mut r);
                    continue 'outer;
                }
                alpha = rho / rv;
                for i in 0..n {
                    s[i] = r[i] - alpha * v[i];
                }
                if norm2(s.iter().copied()) <= target {
                    for i in 0..n {
                        x[i] += alpha * p[i];
                    }
                    break;
                }
                self.apply(&s, &mut t);
                let tt = dot(&t, &t);
                omega = if tt > T::zero() { dot(&t, &s) / tt } else { T::zero() };
                for i in 0..n {
                    x[i] += alpha * p[i] + omega * s[i];
                    r[i] = s[i] - omega * t[i];
                }
                if norm2(r.iter().copied()) <= target {
                    break;
                }
            }
            // confirm against the true residual; recursion residuals drift
            self.refresh_residual(b, x, &mut r);
            if norm2(r.iter().copied()) <= target {
                return true;
            }
            restarts += 1;
        }
        false
    }

    fn refresh_residual(&self, b: &[T], x: &[T], r: &mut [T]) {
        self.apply(x, r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = *bi - *ri;
        }
    }

    fn gauss_seidel(&self, b: &[T], x: &mut [T], target: T, iterations: &mut usize) -> bool {
        let mut scratch = vec![T::zero(); b.len()];
        while *iterations < self.opts.max_iter {
            for _ in 0..50 {
                for k in 0..b.len() {
                    let mut s = b[k];
                    for idx in self.row_ptr[k]..self.row_ptr[k + 1] {
                        s += self.vals[idx] * x[self.cols[idx] as usize];
                    }
                    x[k] = s;
                }
                *iterations += 1;
            }
            if self.residual_norm(x, b, &mut scratch) <= target {
                return true;
            }
        }
        false
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

fn norm2<T: Real>(it: impl Iterator<Item = T>) -> T {
    it.map(|v| v * v).sum::<T>().sqrt()
}

/// Harmonic extension of `boundary_data` into the domain.
pub fn solve_dirichlet<T: Real>(domain: &Domain<T>, boundary_data: &[T]) -> Result<ScalarField<T>> {
    DirichletSolver::new(domain).solve(boundary_data)
}

/// Shortley-Weller Laplacian at the interior nodes.
pub fn laplacian<T: Real>(domain: &Domain<T>, field: &ScalarField<T>) -> Result<Vec<T>> {
    field.check(domain)?;
    let two = T::lit(2.0);
    Ok((0..domain.interior_len())
        .map(|k| {
            let u0 = field.interior[k];
            (0..domain.dim())
                .map(|axis| {
                    let l = domain.arm(k, axis, -1);
                    let r = domain.arm(k, axis, 1);
                    let ul = field.at(l.target);
                    let ur = field.at(r.target);
                    two / (l.len + r.len) * ((ur - u0) / r.len - (u0 - ul) / l.len)
                })
                .sum()
        })
        .collect())
}

/// Three-point derivative at the middle node of arms `(hl, fl)`, `(hr, fr)`;
/// exact for quadratics.
#[inline]
fn centered<T: Real>(fl: T, f0: T, fr: T, hl: T, hr: T) -> T {
    (hl * hl * (fr - f0) + hr * hr * (f0 - fl)) / (hl * hr * (hl + hr))
}

/// Derivative at 0 of the quadratic through `(0, f0)`, `(x1, f1)`, `(x2, f2)`.
#[inline]
fn one_sided<T: Real>(f0: T, f1: T, f2: T, x1: T, x2: T) -> T {
    -f0 * (x1 + x2) / (x1 * x2) - f1 * x2 / (x1 * (x1 - x2)) - f2 * x1 / (x2 * (x2 - x1))
}

/// Arms shorter than this fraction of `h` are skipped by the difference
/// formulas: dividing by them amplifies rounding in the nodal values.
const NEAR_ARM: f64 = 0.05;

/// Derivative at 0 of the quadratic through three distinct abscissae.
#[inline]
fn lagrange_slope<T: Real>(x: [T; 3], f: [T; 3]) -> T {
    let mut d = T::zero();
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        // d/dx of (x - xj)(x - xk) / ((xi - xj)(xi - xk)) at 0
        d += f[i] * (-(x[j] + x[k])) / ((x[i] - x[j]) * (x[i] - x[k]));
    }
    d
}

/// The arm continuing past the far end of `arm`, when that end is an
/// interior node.
fn beyond<T: Real>(domain: &Domain<T>, arm: Arm<T>, axis: usize, dir: i8) -> Option<Arm<T>> {
    match arm.target {
        Target::Interior(q) => Some(domain.arm(q as usize, axis, dir)),
        Target::Boundary(_) => None,
    }
}

/// `None` when both arms along `axis` are shorter than `NEAR_ARM * h`: the
/// grid line through the node then carries no usable spread.
fn interior_partial<T: Real>(domain: &Domain<T>, field: &ScalarField<T>, k: usize, axis: usize) -> Option<T> {
    let near = T::lit(NEAR_ARM) * domain.h();
    let l = domain.arm(k, axis, -1);
    let r = domain.arm(k, axis, 1);
    if l.len < near && r.len < near {
        return None;
    }
    let f0 = field.interior[k];
    let (fl, fr) = (field.at(l.target), field.at(r.target));
    Some(if l.len < near {
        match beyond(domain, r, axis, 1) {
            Some(rr) => lagrange_slope(
                [-l.len, r.len, r.len + rr.len],
                [fl, fr, field.at(rr.target)],
            ),
            None => (fr - fl) / (l.len + r.len),
        }
    } else if r.len < near {
        match beyond(domain, l, axis, -1) {
            Some(ll) => lagrange_slope(
                [r.len, -l.len, -l.len - ll.len],
                [fr, fl, field.at(ll.target)],
            ),
            None => (fr - fl) / (l.len + r.len),
        }
    } else {
        centered(fl, f0, fr, l.len, r.len)
    })
}

/// Fills nodes without a usable stencil along `axis` by linear
/// extrapolation from interior neighbours across another axis.
fn fill_degenerate<T: Real>(domain: &Domain<T>, field: &ScalarField<T>, axis: usize, raw: &[Option<T>]) -> Vec<T> {
    let near = T::lit(NEAR_ARM) * domain.h();
    raw.iter()
        .enumerate()
        .map(|(k, v)| {
            if let Some(v) = v {
                return *v;
            }
            let mut fallback = None;
            for a in (0..domain.dim()).filter(|&a| a != axis) {
                for dir in [-1i8, 1] {
                    let arm = domain.arm(k, a, dir);
                    let Target::Interior(q) = arm.target else { continue };
                    let Some(gq) = raw[q as usize] else { continue };
                    if arm.len < near {
                        continue;
                    }
                    if let Some(next) = beyond(domain, arm, a, dir) {
                        if let (Target::Interior(q2), true) = (next.target, next.len >= near) {
                            if let Some(gq2) = raw[q2 as usize] {
                                return gq + (gq - gq2) * arm.len / next.len;
                            }
                        }
                    }
                    fallback.get_or_insert(gq);
                }
            }
            fallback.unwrap_or_else(|| {
                let l = domain.arm(k, axis, -1);
                let r = domain.arm(k, axis, 1);
                centered(field.at(l.target), field.interior[k], field.at(r.target), l.len, r.len)
            })
        })
        .collect()
}

/// `∂f/∂x_axis` on the closure.
///
/// Interior nodes use the three-point formula on their (possibly clipped)
/// arms. At a boundary node the derivative along its carrying edge is the
/// one-sided quadratic through the node, its interior endpoint and the next
/// node beyond; derivatives across the edge are extrapolated linearly from
/// the interior endpoint along the edge. Points closer than `NEAR_ARM * h`
/// to the evaluation point are replaced by the next node further out, or
/// dropped in favour of a two-point slope when there is none.
pub fn partial<T: Real>(domain: &Domain<T>, field: &ScalarField<T>, axis: usize) -> Result<ScalarField<T>> {
    field.check(domain)?;
    let raw: Vec<Option<T>> = (0..domain.interior_len())
        .map(|k| interior_partial(domain, field, k, axis))
        .collect();
    let interior = fill_degenerate(domain, field, axis, &raw);
    let h = domain.h();
    let near = T::lit(NEAR_ARM) * h;
    let boundary = domain
        .boundary_nodes()
        .iter()
        .enumerate()
        .map(|(bi, node)| {
            let p = node.interior as usize;
            let edge_axis = node.axis as usize;
            let t = node.frac * h;
            let back = domain.arm(p, edge_axis, -node.dir);
            if edge_axis == axis {
                let s = T::from_i8(node.dir).expect("sign");
                if t + back.len < near {
                    return interior[p];
                }
                if t < near {
                    let xb = -s * (t + back.len);
                    return match beyond(domain, back, edge_axis, -node.dir) {
                        Some(bb) => lagrange_slope(
                            [T::zero(), xb, -s * (t + back.len + bb.len)],
                            [field.boundary[bi], field.at(back.target), field.at(bb.target)],
                        ),
                        None => (field.at(back.target) - field.boundary[bi]) / xb,
                    };
                }
                one_sided(
                    field.boundary[bi],
                    field.interior[p],
                    field.at(back.target),
                    -s * t,
                    -s * (t + back.len),
                )
            } else {
                let gp = interior[p];
                match back.target {
                    Target::Interior(q) => gp + (gp - interior[q as usize]) * t / back.len,
                    Target::Boundary(_) => gp,
                }
            }
        })
        .collect();
    Ok(ScalarField { interior, boundary })
}

pub fn gradient<T: Real>(domain: &Domain<T>, field: &ScalarField<T>) -> Result<VectorField<T>> {
    Ok(VectorField {
        components: (0..domain.dim())
            .map(|axis| partial(domain, field, axis))
            .collect::<Result<_>>()?,
    })
}

pub fn divergence<T: Real>(domain: &Domain<T>, field: &VectorField<T>) -> Result<ScalarField<T>> {
    check_len(domain.dim(), field.dim())?;
    let mut acc = partial(domain, &field.components[0], 0)?;
    for (axis, c) in field.components.iter().enumerate().skip(1) {
        acc = acc.zip_with(&partial(domain, c, axis)?, |a, b| a + b);
    }
    Ok(acc)
}

/// `max |f|` over a node subset.
pub fn sup_norm<T: Real>(field: &ScalarField<T>, region: Region) -> Result<T> {
    field
        .values(region)
        .map(|v| v.abs())
        .fold(None, |m: Option<T>, v| Some(m.map_or(v, |m| m.max(v))))
        .ok_or(Error::EmptyRegion)
}

/// `(max_interior |u|, max_boundary |u|)`; the maximum principle says the
/// first never exceeds the second for a harmonic `u`.
pub fn max_principle_sups<T: Real>(field: &ScalarField<T>) -> Result<(T, T)> {
    Ok((
        sup_norm(field, Region::Interior)?,
        sup_norm(field, Region::Boundary)?,
    ))
}

/// Checks `max_closure |u| <= max_boundary |u| + tol`.
pub fn check_max_principle<T: Real>(field: &ScalarField<T>, tol: T) -> Result<()> {
    let (inner, outer) = max_principle_sups(field)?;
    if inner > outer + tol {
        Err(Error::MaxPrincipleViolated {
            interior: inner.as_f64(),
            boundary: outer.as_f64(),
        })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, DomainSpec};

    fn disk(h: f64) -> Domain<f64> {
        build_domain(&DomainSpec::disk(1.0, h)).unwrap()
    }

    fn normal_component(d: &Domain<f64>, i: usize) -> Vec<f64> {
        d.boundary_nodes().iter().map(|b| b.normal[i]).collect()
    }

    #[test]
    fn sym_index_packs_upper_triangle() {
        assert_eq!(
            [(0, 0), (0, 1), (1, 1)].map(|(i, j)| sym_index(2, i, j)),
            [0, 1, 2]
        );
        assert_eq!(
            [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)].map(|(i, j)| sym_index(3, i, j)),
            [0, 1, 2, 3, 4, 5]
        );
        assert_eq!(sym_index(3, 2, 0), sym_index(3, 0, 2));
    }

    #[test]
    fn normal_data_extends_to_x() {
        let h = 0.05;
        let d = disk(h);
        let u = solve_dirichlet(&d, &normal_component(&d, 0)).unwrap();
        let err = (0..d.interior_len())
            .map(|k| (u.interior[k] - d.interior_position(k)[0]).abs())
            .fold(0.0, f64::max);
        assert!(err <= 5.0 * h, "{err}");
        // the stencil is exact for quadratics
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn constant_data_gives_constant_solution() {
        let d = disk(0.04);
        let u = solve_dirichlet(&d, &vec![3.5; d.boundary_len()]).unwrap();
        for v in &u.interior {
            assert!((v - 3.5).abs() <= 1e-10);
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let d = disk(0.1);
        let u = solve_dirichlet(&d, &vec![0.0; d.boundary_len()]).unwrap();
        assert!(u.interior.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn maximum_principle_on_ellipse() {
        let h = 0.04;
        let d = build_domain(&DomainSpec::ellipse(2.0, 1.0, h)).unwrap();
        let u = solve_dirichlet(&d, &normal_component(&d, 0)).unwrap();
        let sup = sup_norm(&u, Region::Interior).unwrap();
        assert!(sup <= 1.0 + 1e-8, "{sup}");
        check_max_principle(&u, 1e-8).unwrap();
    }

    #[test]
    fn bad_data_is_rejected() {
        let d = disk(0.1);
        assert!(solve_dirichlet(&d, &[1.0]).is_err());
        let mut data = vec![0.0; d.boundary_len()];
        data[0] = f64::NAN;
        assert!(matches!(solve_dirichlet(&d, &data), Err(Error::NonFinite(_))));
    }

    #[test]
    fn iteration_cap_reports_residual() {
        let d = disk(0.05);
        let solver = DirichletSolver::with_options(
            &d,
            SolverOptions {
                rel_tol: 1e-14,
                max_iter: 3,
            },
        );
        match solver.solve(&normal_component(&d, 1).iter().map(|v| v * v * v).collect::<Vec<_>>()) {
            Err(Error::SolverDiverged {
                iterations,
                residual,
            }) => {
                assert!(iterations >= 3);
                assert!(residual > 0.0);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn gradient_of_linear_and_quadratic() {
        let h = 0.02;
        let d = disk(h);
        let f = ScalarField::from_fn(&d, |p| p[0]);
        let g = gradient(&d, &f).unwrap();
        for v in g.components[0].values(Region::Closure) {
            assert!((v - 1.0).abs() < 1e-10);
        }
        for v in g.components[1].values(Region::Closure) {
            assert!(v.abs() < 1e-10);
        }
        let q = ScalarField::from_fn(&d, |p| p[0] * p[0] + p[1] * p[1]);
        let g = gradient(&d, &q).unwrap();
        let exact = VectorField::from_fn(&d, |p| [2.0 * p[0], 2.0 * p[1], 0.0]);
        for i in 0..2 {
            let diff = g.components[i].zip_with(&exact.components[i], |a, b| a - b);
            assert!(sup_norm(&diff, Region::Closure).unwrap() < 5.0 * h);
        }
    }

    #[test]
    fn gradient_of_harmonic_solution() {
        let h = 0.02;
        let d = disk(h);
        let u = solve_dirichlet(&d, &normal_component(&d, 0)).unwrap();
        let g = gradient(&d, &u).unwrap();
        for v in g.components[0].values(Region::Closure) {
            assert!((v - 1.0).abs() < 10.0 * h);
        }
        for v in g.components[1].values(Region::Closure) {
            assert!(v.abs() < 10.0 * h);
        }
    }

    #[test]
    fn divergence_examples() {
        let h = 0.02;
        let d = disk(h);
        let id = VectorField::from_fn(&d, |p| *p);
        let div = divergence(&d, &id).unwrap();
        assert!(div.values(Region::Closure).all(|v| (v - 2.0).abs() < 5.0 * h));
        let rot = VectorField::from_fn(&d, |p| [p[1], -p[0], 0.0]);
        let div = divergence(&d, &rot).unwrap();
        assert!(div.values(Region::Closure).all(|v| v.abs() < 5.0 * h));
    }

    #[test]
    fn cubic_harmonic_boundary_derivatives_converge() {
        // u = x^3 - 3xy^2 is harmonic; compare boundary derivatives with 3x^2 - 3y^2
        let err = |h: f64| {
            let d = build_domain(&DomainSpec::ellipse(1.5, 1.0, h)).unwrap();
            let data: Vec<f64> = d
                .boundary_nodes()
                .iter()
                .map(|b| b.position[0].powi(3) - 3.0 * b.position[0] * b.position[1].powi(2))
                .collect();
            let u = solve_dirichlet(&d, &data).unwrap();
            let ux = partial(&d, &u, 0).unwrap();
            d.boundary_nodes()
                .iter()
                .zip(&ux.boundary)
                .map(|(b, v)| (v - 3.0 * (b.position[0].powi(2) - b.position[1].powi(2))).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(0.04), err(0.02));
        assert!(e2 < 0.6 * e1, "{e1} {e2}");
        assert!(e2 < 0.05, "{e2}");
    }

    #[test]
    fn sup_norm_regions() {
        let h = 0.02;
        let d = disk(h);
        let f = ScalarField::from_fn(&d, |p| p[0]);
        assert!((sup_norm(&f, Region::Closure).unwrap() - 1.0).abs() <= h);
        let c = ScalarField::constant(&d, -2.5);
        assert_eq!(sup_norm(&c, Region::Closure).unwrap(), 2.5);
        let empty = ScalarField::<f64> {
            interior: vec![],
            boundary: vec![],
        };
        assert!(matches!(sup_norm(&empty, Region::Boundary), Err(Error::EmptyRegion)));
    }

    #[test]
    fn discrete_subharmonicity_of_squares() {
        let d = build_domain(&DomainSpec::ellipse(2.0, 1.0, 0.05)).unwrap();
        let comps: Vec<_> = (0..2)
            .map(|i| solve_dirichlet(&d, &normal_component(&d, i)).unwrap())
            .collect();
        let sq = comps[0].zip_with(&comps[1], |a, b| a * a + b * b);
        let lap = laplacian(&d, &sq).unwrap();
        assert!(lap.iter().all(|&v| v >= -1e-6), "{:?}", lap.iter().cloned().fold(f64::MAX, f64::min));
    }
}
