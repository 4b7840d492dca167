//! Trace-mapping bounds for W^{1,1} and LD fields computed from harmonic
//! extensions of boundary data on Cartesian level-set grids.

pub mod error;
pub mod expr;
pub mod geometry;
pub mod io;
pub mod laplace;
pub mod ld;
pub mod matnorm;
pub mod optimal_bc;
pub mod scalar;
pub mod sobolev;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Domain64 = geometry::Domain<f64>;
pub type DomainSpec64 = geometry::DomainSpec<f64>;
pub type Shape64 = geometry::Shape<f64>;
pub type ScalarField64 = laplace::ScalarField<f64>;
pub type VectorField64 = laplace::VectorField<f64>;
pub type SymTensorField64 = laplace::SymTensorField<f64>;
pub type SymMatrix64 = matnorm::SymMatrix<f64>;
pub type LdBoundReport64 = ld::LdBoundReport<f64>;
pub type TraceReport64 = sobolev::TraceReport<f64>;

pub type Domain32 = geometry::Domain<f32>;
pub type DomainSpec32 = geometry::DomainSpec<f32>;
pub type ScalarField32 = laplace::ScalarField<f32>;
pub type VectorField32 = laplace::VectorField<f32>;
pub type SymMatrix32 = matnorm::SymMatrix<f32>;
