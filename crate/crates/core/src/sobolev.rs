//! The harmonic normal field, the Sobolev trace constant
//! `B = sup_boundary |div n0|` and the W^{1,1} trace inequality
//!
//! ```text
//! ∫_∂Ω |φ| <= ∫_Ω |∇φ| + B ∫_Ω |φ|
//! ```

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{build_domain, Domain, DomainSpec};
use crate::laplace::{divergence, gradient, sup_norm, DirichletSolver, Region, ScalarField, VectorField};
use crate::scalar::{vec3, Real};

/// Discretisation error constant: `eps_disc = EPS_DISC_C * h * (sum of the
/// integral magnitudes)`, where the magnitude of a term `∫ f` is `∫ |f|`.
/// Calibrated once on the unit disk (worst battery residual 0.41 h Σ∫|f| at
/// h = 0.1, doubled and rounded up) and frozen.
pub const EPS_DISC_C: f64 = 1.0;

/// `eps_disc` for a set of integral magnitudes at grid spacing `h`.
pub fn eps_disc<T: Real>(h: T, magnitudes: &[T]) -> T {
    T::lit(EPS_DISC_C) * h * magnitudes.iter().map(|m| m.abs()).sum::<T>()
}

#[derive(Debug, Clone)]
pub struct NormalField<T> {
    pub field: VectorField<T>,
    pub is_harmonic: bool,
    pub divergence: ScalarField<T>,
    pub sup_div_boundary: T,
    pub sup_div_closure: T,
    /// `max_closure |n|_2`
    pub max_norm: T,
    /// Boundary node where `|div n|` peaks.
    pub argmax_div: [T; 3],
}

/// Component-wise harmonic extension of the outward normal.
///
/// Fails if `|n0| > 1 + 5h` anywhere, or if the interior divergence sup
/// exceeds the boundary sup by more than `10h` times the boundary sup.
pub fn harmonic_normal_field<T: Real>(domain: &Domain<T>) -> Result<NormalField<T>> {
    let dim = domain.dim();
    let data: Vec<Vec<T>> = (0..dim)
        .map(|i| domain.boundary_nodes().iter().map(|b| b.normal[i]).collect())
        .collect();
    let comps = DirichletSolver::new(domain).solve_many(&data)?;
    normal_field_from(domain, VectorField { components: comps }, true)
}

/// Checks the normal-field conditions on an arbitrary extension of the
/// normal and evaluates its divergence.
pub fn normal_field_from<T: Real>(domain: &Domain<T>, field: VectorField<T>, is_harmonic: bool) -> Result<NormalField<T>> {
    let h = domain.h();
    let dim = domain.dim();
    if field.dim() != dim {
        return Err(Error::LengthMismatch {
            expected: dim,
            got: field.dim(),
        });
    }
    let tol = T::lit(1e-8).max(T::epsilon() * T::lit(1e3));
    for (bi, b) in domain.boundary_nodes().iter().enumerate() {
        let err = (0..dim)
            .map(|i| (field.components[i].boundary[bi] - b.normal[i]).abs())
            .fold(T::zero(), T::max);
        if err > tol {
            return Err(Error::NormalFieldViolation {
                what: "boundary value differs from the normal",
                value: err.as_f64(),
                location: b.position.map(|v| v.as_f64()),
            });
        }
    }
    let mag = field.magnitude();
    let (k, max_norm) = mag
        .interior
        .iter()
        .copied()
        .enumerate()
        .fold((usize::MAX, T::zero()), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
    let max_norm = max_norm.max(sup_norm(&mag, Region::Boundary)?);
    if max_norm > T::one() + T::lit(5.0) * h {
        let loc = if k == usize::MAX {
            [0.0; 3]
        } else {
            domain.interior_position(k).map(|v| v.as_f64())
        };
        return Err(Error::NormalFieldViolation {
            what: "|n|",
            value: max_norm.as_f64(),
            location: loc,
        });
    }
    let div = divergence(domain, &field)?;
    let sup_b = sup_norm(&div, Region::Boundary)?;
    let sup_c = sup_norm(&div, Region::Closure)?;
    let argmax = div
        .boundary
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).expect("finite divergence"))
        .map(|(i, _)| domain.boundary_nodes()[i].position)
        .unwrap_or([T::zero(); 3]);
    if is_harmonic && sup_c > sup_b * (T::one() + T::lit(10.0) * h) {
        let k = div
            .interior
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).expect("finite divergence"))
            .map(|(k, _)| k)
            .unwrap_or(0);
        return Err(Error::NormalFieldViolation {
            what: "interior divergence above its boundary sup",
            value: sup_c.as_f64(),
            location: domain.interior_position(k).map(|v| v.as_f64()),
        });
    }
    Ok(NormalField {
        field,
        is_harmonic,
        divergence: div,
        sup_div_boundary: sup_b,
        sup_div_closure: sup_c,
        max_norm,
        argmax_div: argmax,
    })
}

/// `B = sup_boundary |div n0|`.
pub fn sobolev_b<T: Real>(domain: &Domain<T>) -> Result<T> {
    Ok(harmonic_normal_field(domain)?.sup_div_boundary)
}

/// `|∂Ω| / |Ω|`, a lower bound for the sup of `|div n|` over every normal
/// field.
pub fn motron_lower_bound<T: Real>(domain: &Domain<T>) -> T {
    domain.area() / domain.volume()
}

/// `B` at two grid spacings and the first-order Richardson extrapolation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Refinement<T> {
    pub h: T,
    pub b_coarse: T,
    pub h_fine: T,
    pub b_fine: T,
    pub richardson: T,
}

impl<T: Real> Refinement<T> {
    pub fn from_pair(h: T, b_coarse: T, h_fine: T, b_fine: T) -> Self {
        // error ~ C h: B* ≈ (h B_f - h_f B_c) / (h - h_f)
        let richardson = (h * b_fine - h_fine * b_coarse) / (h - h_fine);
        Self {
            h,
            b_coarse,
            h_fine,
            b_fine,
            richardson,
        }
    }

    pub fn relative_change(&self) -> T {
        ((self.b_fine - self.b_coarse) / self.b_fine).abs()
    }
}

/// `B` at `spec.h` and `spec.h / 2`.
pub fn sobolev_b_refined<T: Real>(spec: &DomainSpec<T>) -> Result<Refinement<T>> {
    let h = spec.h;
    let hf = h / T::lit(2.0);
    let bc = sobolev_b(&build_domain(spec)?)?;
    let bf = sobolev_b(&build_domain(&spec.with_h(hf))?)?;
    Ok(Refinement::from_pair(h, bc, hf, bf))
}

/// Both sides of a trace inequality `lhs <= rhs` with its error budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceReport<T> {
    pub lhs: T,
    /// `∫_Ω |∇φ|` (W^{1,1}) or `A ‖ε(w)‖_1` (LD).
    pub grad_term: T,
    /// `B ∫_Ω |φ|`.
    pub mass_term: T,
    pub slack: T,
    pub b_used: T,
    pub eps_disc: T,
    pub h: T,
}

impl<T: Real> TraceReport<T> {
    pub fn new(lhs: T, grad_term: T, mass_term: T, b_used: T, h: T) -> Self {
        Self {
            lhs,
            grad_term,
            mass_term,
            slack: grad_term + mass_term - lhs,
            b_used,
            eps_disc: eps_disc(h, &[lhs, grad_term, mass_term]),
            h,
        }
    }

    pub fn rhs(&self) -> T {
        self.grad_term + self.mass_term
    }

    pub fn holds(&self) -> bool {
        self.slack >= -self.eps_disc
    }
}

pub(crate) fn integrate<T: Real>(domain: &Domain<T>, f: &ScalarField<T>) -> Result<T> {
    domain.integrate_nodal(&f.interior, &f.boundary)
}

/// Evaluates `∫_∂Ω|φ|`, `∫_Ω|∇φ|` and `B ∫_Ω|φ|` with `B = b`.
pub fn verify_trace_inequality<T: Real>(domain: &Domain<T>, phi: &ScalarField<T>, b: T) -> Result<TraceReport<T>> {
    let abs = phi.abs();
    let lhs = domain.integrate_boundary(&abs.boundary)?;
    let grad = gradient(domain, phi)?.magnitude();
    let grad_term = integrate(domain, &grad)?;
    let mass_term = b * integrate(domain, &abs)?;
    Ok(TraceReport::new(lhs, grad_term, mass_term, b, domain.h()))
}

/// Two sides of `∫_∂Ω ψ = ∫_Ω n_i ψ_,i + ∫_Ω n_i,i ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck<T> {
    pub lhs: T,
    pub rhs: T,
    pub residual: T,
    /// Sum of the term magnitudes `∫|f|`.
    pub scale: T,
    pub eps_disc: T,
}

impl<T: Real> IdentityCheck<T> {
    pub(crate) fn new(lhs: T, rhs: T, magnitudes: &[T], h: T) -> Self {
        Self {
            lhs,
            rhs,
            residual: (lhs - rhs).abs(),
            scale: magnitudes.iter().copied().sum(),
            eps_disc: eps_disc(h, magnitudes),
        }
    }

    pub fn holds(&self) -> bool {
        self.residual <= self.eps_disc
    }

    /// `residual / scale`, zero when every term vanishes.
    pub fn relative(&self) -> T {
        if self.scale > T::zero() {
            self.residual / self.scale
        } else {
            self.residual
        }
    }
}

pub fn divergence_identity_check<T: Real>(
    domain: &Domain<T>,
    n: &VectorField<T>,
    psi: &ScalarField<T>,
) -> Result<IdentityCheck<T>> {
    let lhs = domain.integrate_boundary(&psi.boundary)?;
    let gpsi = gradient(domain, psi)?;
    let mut flux = ScalarField::zeros(domain);
    for (ni, gi) in n.components.iter().zip(&gpsi.components) {
        flux = flux.zip_with(&ni.zip_with(gi, |a, b| a * b), |a, b| a + b);
    }
    let div = divergence(domain, n)?;
    let source = div.zip_with(psi, |a, b| a * b);
    let t1 = integrate(domain, &flux)?;
    let t2 = integrate(domain, &source)?;
    let rhs = t1 + t2;
    let mags = [
        domain.integrate_boundary(&psi.abs().boundary)?,
        integrate(domain, &flux.abs())?,
        integrate(domain, &source.abs())?,
    ];
    Ok(IdentityCheck::new(lhs, rhs, &mags, domain.h()))
}

/// A named scalar test field.
pub struct BatteryField<T> {
    pub name: &'static str,
    pub f: Box<dyn Fn(&[T; 3]) -> T + Send + Sync>,
}

/// Standard test fields: polynomials of degree 0, 1 and 3, a radial bump,
/// an oscillating sign-changing field and a field concentrated near the
/// boundary, built from the approximate signed distance to it.
pub fn battery<T: Real>(domain: &Domain<T>) -> Vec<BatteryField<T>> {
    let imp = domain.implicit().clone();
    let lit = T::lit;
    let mut out: Vec<BatteryField<T>> = vec![
        BatteryField {
            name: "constant",
            f: Box::new(|_| T::one()),
        },
        BatteryField {
            name: "linear",
            f: Box::new(|p| p[0]),
        },
        BatteryField {
            name: "cubic",
            f: Box::new(move |p| {
                p[0] * p[0] * p[0] - lit(3.0) * p[0] * p[1] * p[1] + lit(0.5) * p[1] * p[1] + lit(0.2) * p[2]
                    - lit(0.1)
            }),
        },
        BatteryField {
            name: "bump",
            f: Box::new(move |p| (-lit(4.0) * (p[0] * p[0] + p[1] * p[1] + p[2] * p[2])).exp()),
        },
        BatteryField {
            name: "oscillating",
            f: Box::new(move |p| (lit(3.0) * p[0]).sin() * (lit(2.0) * p[1] + lit(0.3)).cos() + lit(0.5) * p[2]),
        },
    ];
    // phi / |grad phi| approximates the signed distance, so the layer has
    // width 1/8 whatever the scaling of the levelset.
    let dim = domain.dim();
    let delta = T::epsilon().cbrt();
    out.push(BatteryField {
        name: "boundary-layer",
        f: Box::new(move |p| {
            let phi = imp.value(p).min(T::zero());
            let g = vec3::norm(&imp.gradient(p, dim, delta));
            if g <= T::epsilon() {
                return T::zero();
            }
            (lit(8.0) * phi / g).exp()
        }),
    });
    out
}
