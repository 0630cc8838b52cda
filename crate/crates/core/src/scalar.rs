//! Floating point abstraction for the scalar kernels.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Real scalar usable by the special-function, quadrature and fitting kernels.
///
/// Implemented for `f32` and `f64`. The spectral pipeline itself runs on
/// [`Real`](crate::Real) because its tolerances sit near `f64` round-off.
pub trait Scalar: Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static {
    /// Converts an `f64` constant into `Self`.
    fn lit(x: f64) -> Self;

    /// Converts an index or count into `Self`.
    fn of(n: usize) -> Self {
        Self::lit(n as f64)
    }
}

impl Scalar for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }
}

impl Scalar for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }
}
