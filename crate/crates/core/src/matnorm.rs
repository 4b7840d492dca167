//! Norms of symmetric 2x2 and 3x3 matrices, their equivalence constants,
//! and a Jacobi eigensolver.
//!
//! Vector norms (`vec1`, `vec2`, `vecInf`) run over all `n²` ordered index
//! pairs, so off-diagonal entries count twice and `vec2` is the Frobenius
//! norm.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense symmetric matrix of dimension 2 or 3. Unused slots stay zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMatrix<T> {
    dim: usize,
    m: [[T; 3]; 3],
}

impl<T: Real> SymMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim == 2 || dim == 3, "dimension must be 2 or 3");
        Self {
            dim,
            m: [[T::zero(); 3]; 3],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { T::one() } else { T::zero() })
    }

    /// Builds the matrix from `f(i, j)` evaluated for `i <= j`.
    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut s = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                s.set(i, j, f(i, j));
            }
        }
        s
    }

    /// From a full row-major array; only the upper triangle is read.
    pub fn from_rows(dim: usize, rows: &[&[T]]) -> Self {
        Self::from_fn(dim, |i, j| rows[i][j])
    }

    /// `u ⊗ u`
    pub fn outer(dim: usize, u: &[T; 3]) -> Self {
        Self::from_fn(dim, |i, j| u[i] * u[j])
    }

    /// `u ⊗ v + v ⊗ u`
    pub fn sym_outer(dim: usize, u: &[T; 3], v: &[T; 3]) -> Self {
        Self::from_fn(dim, |i, j| u[i] * v[j] + v[i] * u[j])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.m[i][j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.m[i][j] = v;
        self.m[j][i] = v;
    }

    /// Packed upper triangle, row by row.
    pub fn upper(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.dim * (self.dim + 1) / 2);
        for i in 0..self.dim {
            for j in i..self.dim {
                out.push(self.m[i][j]);
            }
        }
        out
    }

    pub fn apply(&self, v: &[T; 3]) -> [T; 3] {
        let mut out = [T::zero(); 3];
        for (i, o) in out.iter_mut().enumerate().take(self.dim) {
            *o = (0..self.dim).map(|j| self.m[i][j] * v[j]).sum();
        }
        out
    }

    pub fn scale(&self, a: T) -> Self {
        Self::from_fn(self.dim, |i, j| a * self.m[i][j])
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self::from_fn(self.dim, |i, j| self.m[i][j] + other.m[i][j])
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-T::one()))
    }

    /// `Q T Qᵀ` for a square `q` whose rows are given.
    pub fn conjugate(&self, q: &[[T; 3]; 3]) -> Self {
        let n = self.dim;
        Self::from_fn(n, |i, j| {
            let mut s = T::zero();
            for a in 0..n {
                for b in 0..n {
                    s += q[i][a] * self.m[a][b] * q[j][b];
                }
            }
            s
        })
    }

    pub fn determinant(&self) -> T {
        let m = &self.m;
        if self.dim == 2 {
            m[0][0] * m[1][1] - m[0][1] * m[1][0]
        } else {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
    }

    pub fn max_abs_entry(&self) -> T {
        self.entries().fold(T::zero(), |a, v| a.max(v.abs()))
    }

    fn entries(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.dim).flat_map(move |i| (0..self.dim).map(move |j| self.m[i][j]))
    }

    pub fn is_finite(&self) -> bool {
        self.entries().all(|v| v.is_finite())
    }

    /// Eigenvalues in ascending order by cyclic Jacobi rotations.
    pub fn eigenvalues(&self) -> Vec<T> {
        let n = self.dim;
        let mut a = self.m;
        let frob = norm(self, NormKind::Vec2);
        let tol = T::lit(1e-13).max(T::epsilon() * T::lit(4.0)) * frob;
        let off = |a: &[[T; 3]; 3]| {
            let mut s = T::zero();
            for i in 0..n {
                for j in (i + 1)..n {
                    s += a[i][j] * a[i][j];
                }
            }
            (s + s).sqrt()
        };
        for _sweep in 0..64 {
            if off(&a) <= tol {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p][q];
                    if apq == T::zero() {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (apq + apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let t = if theta == T::zero() { T::one() } else { t };
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for r in 0..n {
                        let arp = a[r][p];
                        let arq = a[r][q];
                        a[r][p] = c * arp - s * arq;
                        a[r][q] = s * arp + c * arq;
                    }
                    for r in 0..n {
                        let apr = a[p][r];
                        let aqr = a[q][r];
                        a[p][r] = c * apr - s * aqr;
                        a[q][r] = s * apr + c * aqr;
                    }
                    a[p][q] = T::zero();
                    a[q][p] = T::zero();
                }
            }
        }
        let mut ev: Vec<T> = (0..n).map(|i| a[i][i]).collect();
        ev.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
        ev
    }
}

impl<T: Real> fmt::Display for SymMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.dim {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.dim {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.m[i][j])?;
            }
        }
        write!(f, "]")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormKind {
    #[serde(rename = "op1")]
    Op1,
    /// Spectral radius.
    #[serde(rename = "op2")]
    Op2,
    #[serde(rename = "opInf")]
    OpInf,
    #[serde(rename = "vec1")]
    Vec1,
    #[serde(rename = "vec2")]
    Vec2,
    #[serde(rename = "vecInf")]
    VecInf,
    /// Dual of the spectral norm: sum of absolute eigenvalues.
    #[serde(rename = "dualOp2", alias = "dual_op2")]
    DualOp2,
}

impl NormKind {
    pub const ALL: [NormKind; 7] = [
        NormKind::Op1,
        NormKind::Op2,
        NormKind::OpInf,
        NormKind::Vec1,
        NormKind::Vec2,
        NormKind::VecInf,
        NormKind::DualOp2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NormKind::Op1 => "op1",
            NormKind::Op2 => "op2",
            NormKind::OpInf => "opInf",
            NormKind::Vec1 => "vec1",
            NormKind::Vec2 => "vec2",
            NormKind::VecInf => "vecInf",
            NormKind::DualOp2 => "dualOp2",
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace(['_', '-'], "");
        NormKind::ALL
            .into_iter()
            .find(|k| k.name().to_ascii_lowercase() == key)
            .ok_or_else(|| Error::Unsupported(format!("unknown norm '{s}'")))
    }
}

pub fn eigenvalues<T: Real>(t: &SymMatrix<T>) -> Vec<T> {
    t.eigenvalues()
}

pub fn norm<T: Real>(t: &SymMatrix<T>, kind: NormKind) -> T {
    let n = t.dim;
    match kind {
        // identical formula: the matrix is symmetric
        NormKind::Op1 | NormKind::OpInf => (0..n)
            .map(|i| (0..n).map(|j| t.m[i][j].abs()).sum::<T>())
            .fold(T::zero(), T::max),
        NormKind::Op2 => t
            .eigenvalues()
            .into_iter()
            .fold(T::zero(), |a, l| a.max(l.abs())),
        NormKind::Vec1 => t.entries().map(|v| v.abs()).sum(),
        NormKind::Vec2 => t.entries().map(|v| v * v).sum::<T>().sqrt(),
        NormKind::VecInf => t.max_abs_entry(),
        NormKind::DualOp2 => t.eigenvalues().into_iter().map(|l| l.abs()).sum(),
    }
}

/// One of the exact two-sided relations between symmetric matrix norms:
/// `lower <= |T|_num / |T|_den <= upper`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Relation {
    pub num: NormKind,
    pub den: NormKind,
    pub lower: f64,
    pub upper: f64,
}

impl Relation {
    pub fn label(&self) -> String {
        format!("{}/{}", self.num, self.den)
    }
}

pub fn relations(n: usize) -> [Relation; 5] {
    let nf = n as f64;
    let r = nf.sqrt();
    let rel = |num, den, lower, upper| Relation {
        num,
        den,
        lower,
        upper,
    };
    [
        rel(NormKind::Op2, NormKind::Op1, 1.0 / r, r),
        rel(NormKind::Vec2, NormKind::Op2, 1.0, r),
        rel(NormKind::Op2, NormKind::VecInf, 1.0, nf),
        rel(NormKind::DualOp2, NormKind::Op2, 1.0, nf),
        rel(NormKind::DualOp2, NormKind::Vec2, 1.0, r),
    ]
}

/// Observed range of one relation over a sample set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceRow {
    pub pair: String,
    pub lower: f64,
    pub upper: f64,
    pub observed_min: f64,
    pub observed_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lower,
    Upper,
}

/// A matrix at which one side of a relation is attained.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub relation: usize,
    pub side: Side,
    pub name: &'static str,
    pub matrix: SymMatrix<f64>,
}

/// Householder reflection `I - 2 u⊗u` whose max row sum is `√n` while its
/// spectral norm is 1.
pub fn reflection_witness(n: usize) -> SymMatrix<f64> {
    let nf = n as f64;
    // first row sum |1-2s| + 2 sqrt((n-1) s (1-s)) peaks at this s
    let s = (1.0 - 1.0 / nf.sqrt()) / 2.0;
    let rest = ((1.0 - s) / (nf - 1.0)).sqrt();
    let mut u = [0.0; 3];
    u[0] = s.sqrt();
    for v in u.iter_mut().take(n).skip(1) {
        *v = rest;
    }
    SymMatrix::identity(n).sub(&SymMatrix::outer(n, &u).scale(2.0))
}

/// Witnesses for every attainable bound of [`relations`]. The upper bound of
/// `op2/op1` is not attained by any symmetric matrix (the spectral radius
/// never exceeds an induced norm), so it has none.
pub fn witnesses(n: usize) -> Vec<Witness> {
    let single = {
        let mut m = SymMatrix::zeros(n);
        m.set(0, 0, 1.0);
        m
    };
    let ones = SymMatrix::from_fn(n, |_, _| 1.0);
    let id = SymMatrix::identity(n);
    let w = |relation, side, name, matrix| Witness {
        relation,
        side,
        name,
        matrix,
    };
    vec![
        w(0, Side::Lower, "reflection", reflection_witness(n)),
        w(1, Side::Lower, "single-entry", single),
        w(1, Side::Upper, "identity", id),
        w(2, Side::Lower, "single-entry", single),
        w(2, Side::Upper, "rank-one", ones),
        w(3, Side::Lower, "single-entry", single),
        w(3, Side::Upper, "identity", id),
        w(4, Side::Lower, "single-entry", single),
        w(4, Side::Upper, "identity", id),
    ]
}

pub fn ratio(t: &SymMatrix<f64>, rel: &Relation) -> f64 {
    norm(t, rel.num) / norm(t, rel.den)
}

pub fn random_sym(n: usize, rng: &mut impl Rng) -> SymMatrix<f64> {
    let mut m = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            m.set(i, j, rng.gen_range(-1.0..=1.0));
        }
    }
    m
}

fn random_unit(n: usize, rng: &mut impl Rng) -> [f64; 3] {
    loop {
        let mut v = [0.0; 3];
        for x in v.iter_mut().take(n) {
            *x = rng.gen_range(-1.0..=1.0);
        }
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 1e-3 && r <= 1.0 {
            return v.map(|x| x / r);
        }
    }
}

/// Draws `samples` random symmetric matrices (entries uniform in `[-1, 1]`)
/// plus structured seeds (identity, single entries, rank-one projectors,
/// the witnesses) and checks every relation on each. Returns the observed
/// ratio range per relation.
pub fn verify_equivalence_constants(n: usize, samples: usize, seed: u64) -> Result<Vec<EquivalenceRow>> {
    if n != 2 && n != 3 {
        return Err(Error::Unsupported(format!("dimension {n}")));
    }
    if samples == 0 {
        return Err(Error::InvalidSpec("sample count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mats: Vec<SymMatrix<f64>> = Vec::with_capacity(samples + 16);
    mats.push(SymMatrix::identity(n));
    for i in 0..n {
        for j in i..n {
            let mut m = SymMatrix::zeros(n);
            m.set(i, j, 1.0);
            mats.push(m);
        }
    }
    for _ in 0..4 {
        let v = random_unit(n, &mut rng);
        mats.push(SymMatrix::outer(n, &v));
    }
    mats.extend(witnesses(n).into_iter().map(|w| w.matrix));
    for _ in 0..samples {
        mats.push(random_sym(n, &mut rng));
    }

    let rels = relations(n);
    let mut rows: Vec<EquivalenceRow> = rels
        .iter()
        .map(|r| EquivalenceRow {
            pair: r.label(),
            lower: r.lower,
            upper: r.upper,
            observed_min: f64::INFINITY,
            observed_max: f64::NEG_INFINITY,
        })
        .collect();
    let slack = 1e-12;
    for m in &mats {
        if norm(m, NormKind::Vec2) == 0.0 {
            continue;
        }
        for (rel, row) in rels.iter().zip(rows.iter_mut()) {
            let q = ratio(m, rel);
            if !(q >= rel.lower * (1.0 - slack) && q <= rel.upper * (1.0 + slack)) {
                return Err(Error::EquivalenceViolated {
                    pair: rel.label(),
                    ratio: q,
                    lower: rel.lower,
                    upper: rel.upper,
                    matrix: m.to_string(),
                });
            }
            row.observed_min = row.observed_min.min(q);
            row.observed_max = row.observed_max.max(q);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn m2(a: f64, b: f64, c: f64) -> SymMatrix<f64> {
        SymMatrix::from_rows(2, &[&[a, b], &[b, c]])
    }

    fn m3(v: [f64; 6]) -> SymMatrix<f64> {
        SymMatrix::from_rows(
            3,
            &[&[v[0], v[1], v[2]], &[v[1], v[3], v[4]], &[v[2], v[4], v[5]]],
        )
    }

    /// Rotation from three Euler-like angles.
    fn rotation(a: f64, b: f64, c: f64) -> [[f64; 3]; 3] {
        let rz = |t: f64| [[t.cos(), -t.sin(), 0.0], [t.sin(), t.cos(), 0.0], [0.0, 0.0, 1.0]];
        let rx = |t: f64| [[1.0, 0.0, 0.0], [0.0, t.cos(), -t.sin()], [0.0, t.sin(), t.cos()]];
        let mul = |p: [[f64; 3]; 3], q: [[f64; 3]; 3]| {
            let mut r = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    r[i][j] = (0..3).map(|k| p[i][k] * q[k][j]).sum();
                }
            }
            r
        };
        mul(mul(rz(a), rx(b)), rz(c))
    }

    #[test]
    fn eigenvalue_examples() {
        let ev = SymMatrix::<f64>::identity(3).eigenvalues();
        assert_eq!(ev, vec![1.0, 1.0, 1.0]);
        let d = m3([5.0, 0.0, 0.0, -2.0, 0.0, 0.0]);
        let ev = d.eigenvalues();
        assert_eq!(ev, vec![-2.0, 0.0, 5.0]);

        let th = std::f64::consts::FRAC_PI_3;
        let ev = m2(th.cos(), th.sin(), 0.0).eigenvalues();
        // roots of λ² - cosθ λ - sin²θ
        let c = th.cos();
        let disc = (c * c + 4.0 * th.sin().powi(2)).sqrt();
        assert_relative_eq!(ev[0], (c - disc) / 2.0, epsilon = 1e-14);
        assert_relative_eq!(ev[1], (c + disc) / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn norm_examples() {
        let id = SymMatrix::<f64>::identity(3);
        assert_relative_eq!(norm(&id, NormKind::Op2), 1.0);
        assert_relative_eq!(norm(&id, NormKind::Vec2), 3f64.sqrt());
        assert_relative_eq!(norm(&id, NormKind::DualOp2), 3.0);
        assert_relative_eq!(norm(&id, NormKind::Op1), 1.0);
        assert_relative_eq!(norm(&id, NormKind::VecInf), 1.0);
        assert_relative_eq!(norm(&id, NormKind::Vec1), 3.0);

        let flip = m2(0.0, 1.0, 0.0);
        assert_relative_eq!(norm(&flip, NormKind::Op2), 1.0, epsilon = 1e-15);
        assert_relative_eq!(norm(&flip, NormKind::Vec2), 2f64.sqrt());
        // max row sum; every row holds a single 1
        assert_relative_eq!(norm(&flip, NormKind::Op1), 1.0);
        assert_relative_eq!(norm(&flip, NormKind::Vec1), 2.0);
        assert_relative_eq!(norm(&flip, NormKind::DualOp2), 2.0, epsilon = 1e-15);

        let th = std::f64::consts::FRAC_PI_2;
        let t = m3([th.cos(), th.sin(), 0.0, 0.0, 0.0, 0.0]);
        assert_relative_eq!(norm(&t, NormKind::Vec2), 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn norm_kind_names_round_trip() {
        for k in NormKind::ALL {
            assert_eq!(k.name().parse::<NormKind>().unwrap(), k);
            let json = format!("\"{}\"", k.name());
            let back: NormKind = serde_json_like(&json);
            assert_eq!(back, k);
        }
        assert_eq!("dual_op2".parse::<NormKind>().unwrap(), NormKind::DualOp2);
        assert!("op3".parse::<NormKind>().is_err());
    }

    // the core crate has no JSON dependency; serde's value deserializer does
    fn serde_json_like(s: &str) -> NormKind {
        use serde::de::value::{Error as DeError, StrDeserializer};
        use serde::de::IntoDeserializer;
        let raw = s.trim_matches('"');
        let d: StrDeserializer<'_, DeError> = raw.into_deserializer();
        NormKind::deserialize(d).unwrap()
    }

    #[test]
    fn f32_eigenvalues() {
        let t = SymMatrix::<f32>::from_rows(2, &[&[2.0, 1.0], &[1.0, 2.0]]);
        let ev = t.eigenvalues();
        assert!((ev[0] - 1.0).abs() < 1e-6 && (ev[1] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn equivalence_table_and_witnesses() {
        for n in [2, 3] {
            let rows = verify_equivalence_constants(n, 2000, 7).unwrap();
            assert_eq!(rows.len(), 5);
            for r in &rows {
                assert!(r.observed_min >= r.lower * (1.0 - 1e-12), "{r:?}");
                assert!(r.observed_max <= r.upper * (1.0 + 1e-12), "{r:?}");
            }
            let rels = relations(n);
            for w in witnesses(n) {
                let rel = &rels[w.relation];
                let target = match w.side {
                    Side::Lower => rel.lower,
                    Side::Upper => rel.upper,
                };
                assert_relative_eq!(ratio(&w.matrix, rel), target, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn reflection_is_orthogonal() {
        for n in [2, 3] {
            let r = reflection_witness(n);
            for l in r.eigenvalues() {
                assert_relative_eq!(l.abs(), 1.0, epsilon = 1e-14);
            }
            assert_relative_eq!(norm(&r, NormKind::Op1), (n as f64).sqrt(), epsilon = 1e-14);
        }
    }

    #[test]
    fn rank_one_projector_attains_lower_bounds() {
        let v = [1.0, 2.0, -2.0].map(|x: f64| x / 3.0);
        let p = SymMatrix::outer(3, &v);
        for k in [NormKind::Op2, NormKind::Vec2, NormKind::DualOp2] {
            assert_relative_eq!(norm(&p, k), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(verify_equivalence_constants(4, 10, 0).is_err());
        assert!(verify_equivalence_constants(2, 0, 0).is_err());
    }

    fn arb_sym(n: usize) -> impl Strategy<Value = SymMatrix<f64>> {
        prop::collection::vec(-3.0f64..3.0, 6).prop_map(move |v| {
            if n == 2 {
                m2(v[0], v[1], v[2])
            } else {
                m3([v[0], v[1], v[2], v[3], v[4], v[5]])
            }
        })
    }

    fn arb_any() -> impl Strategy<Value = SymMatrix<f64>> {
        prop_oneof![arb_sym(2), arb_sym(3)]
    }

    proptest! {
        #[test]
        fn homogeneity(t in arb_any(), a in -5.0f64..5.0) {
            for k in NormKind::ALL {
                let lhs = norm(&t.scale(a), k);
                let rhs = a.abs() * norm(&t, k);
                prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs), "{k}: {lhs} vs {rhs}");
            }
        }

        #[test]
        fn triangle_inequality(s in arb_sym(3), t in arb_sym(3)) {
            for k in NormKind::ALL {
                let sum = norm(&s.add(&t), k);
                prop_assert!(sum <= norm(&s, k) + norm(&t, k) + 1e-12, "{k}");
            }
        }

        #[test]
        fn op1_equals_opinf(t in arb_any()) {
            prop_assert_eq!(norm(&t, NormKind::Op1).to_bits(), norm(&t, NormKind::OpInf).to_bits());
        }

        #[test]
        fn frobenius_is_eigenvalue_sum(t in arb_any()) {
            let ev: f64 = t.eigenvalues().iter().map(|l| l * l).sum();
            let f = norm(&t, NormKind::Vec2);
            prop_assert!((f * f - ev).abs() <= 1e-10 * (1.0 + ev));
        }

        #[test]
        fn characteristic_polynomial_residual(t in arb_any()) {
            let scale = norm(&t, NormKind::Vec2).max(1e-300);
            for l in t.eigenvalues() {
                let shifted = t.sub(&SymMatrix::identity(t.dim()).scale(l));
                let r = shifted.determinant().abs();
                prop_assert!(r <= 1e-10 * scale.powi(t.dim() as i32), "{r}");
            }
        }

        #[test]
        fn rotation_invariance(t in arb_sym(3), a in 0.0f64..6.3, b in 0.0f64..6.3, c in 0.0f64..6.3) {
            let q = rotation(a, b, c);
            let r = t.conjugate(&q);
            for k in [NormKind::Op2, NormKind::Vec2, NormKind::DualOp2] {
                prop_assert!((norm(&r, k) - norm(&t, k)).abs() <= 1e-10 * (1.0 + norm(&t, k)));
            }
        }

        #[test]
        fn spectral_norm_dominates_sampled_stretch(t in arb_any(), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = t.dim();
            let sampled = (0..10_000)
                .map(|_| {
                    let v = random_unit(n, &mut rng);
                    let tv = t.apply(&v);
                    tv.iter().map(|x| x * x).sum::<f64>().sqrt()
                })
                .fold(0.0, f64::max);
            let o2 = norm(&t, NormKind::Op2);
            prop_assert!(sampled <= o2 + 1e-12);
            prop_assert!(o2 - sampled <= 1e-3 * (1.0 + o2), "gap {}", o2 - sampled);
        }
    }
}
