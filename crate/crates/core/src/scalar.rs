//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar the solvers are generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only for values the type cannot hold.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal out of range for scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count out of range for scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Small fixed-size vector helpers; 2D data lives in the first two slots
/// with a zero third component.
pub(crate) mod vec3 {
    use super::Real;

    #[inline]
    pub fn zero<T: Real>() -> [T; 3] {
        [T::zero(); 3]
    }

    #[inline]
    pub fn dot<T: Real>(a: &[T; 3], b: &[T; 3]) -> T {
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }

    #[inline]
    pub fn norm<T: Real>(a: &[T; 3]) -> T {
        dot(a, a).sqrt()
    }

    #[inline]
    pub fn sub<T: Real>(a: &[T; 3], b: &[T; 3]) -> [T; 3] {
        [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
    }

    #[inline]
    pub fn add<T: Real>(a: &[T; 3], b: &[T; 3]) -> [T; 3] {
        [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
    }

    #[inline]
    pub fn scale<T: Real>(a: &[T; 3], s: T) -> [T; 3] {
        [a[0] * s, a[1] * s, a[2] * s]
    }

    #[inline]
    pub fn axpy<T: Real>(a: &[T; 3], s: T, b: &[T; 3]) -> [T; 3] {
        [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
    }

    #[inline]
    pub fn cross<T: Real>(a: &[T; 3], b: &[T; 3]) -> [T; 3] {
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    }

    /// Returns `a / |a|`, or `None` for a (numerically) zero vector.
    #[inline]
    pub fn normalized<T: Real>(a: &[T; 3]) -> Option<[T; 3]> {
        let n = norm(a);
        if n > T::min_positive_value() && n.is_finite() {
            Some(scale(a, T::one() / n))
        } else {
            None
        }
    }

    pub fn unit<T: Real>(axis: usize) -> [T; 3] {
        let mut e = zero::<T>();
        e[axis] = T::one();
        e
    }
}
