//! Scalar abstraction for the numeric core.
//!
//! Everything numeric in this crate is generic over [`Real`], a float-like
//! scalar backed by `num-traits`. `f64` is the canonical instantiation (the
//! `*64` aliases at the crate root); `f32` works too where lower precision
//! is acceptable.

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};

/// Floating-point scalar: f32 or f64.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Gauss error function.
    fn erf(self) -> Self;

    /// Lossy conversion from `f64` (never fails for f32/f64).
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 -> Real conversion")
    }

    /// Lossy view as `f64`, for diagnostics and reports.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real -> f64 conversion")
    }
}

impl Real for f64 {
    #[inline]
    fn erf(self) -> Self {
        libm::erf(self)
    }
}

impl Real for f32 {
    #[inline]
    fn erf(self) -> Self {
        libm::erff(self)
    }
}
