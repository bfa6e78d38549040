//! Floating-point scalar abstraction.
//!
//! The whole pipeline — generators, CDF models, sorter, rank index — is
//! generic over the key type. `f64` is the default (see [`crate::Key`]);
//! `f32` works anywhere a smaller key is acceptable.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point key type: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Copy + Debug + Display + Send + Sync + 'static
{
    /// Widens to `f64`. Exact for both `f32` and `f64`.
    fn to_f64_exact(self) -> f64;

    /// Nearest representable value to `v`.
    fn from_f64_approx(v: f64) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn to_f64_exact(self) -> f64 {
        self
    }

    #[inline]
    fn from_f64_approx(v: f64) -> Self {
        v
    }
}

impl Scalar for f32 {
    #[inline]
    fn to_f64_exact(self) -> f64 {
        self as f64
    }

    #[inline]
    fn from_f64_approx(v: f64) -> Self {
        v as f32
    }
}
