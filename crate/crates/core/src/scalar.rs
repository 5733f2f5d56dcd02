//! Scalar abstractions shared by the numeric kernels.
//!
//! The steady-state kernels (Buzen recursion, GTH elimination, product-form
//! enumeration, dense Gaussian elimination) only need field arithmetic, so
//! they are written against [`Scalar`] and run unchanged on `f64`, `f32` and
//! exact rationals. Anything touching logarithms or distribution inverses is
//! bound to [`Real`].

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, Signed};

/// Field-like scalar: exact or floating point.
pub trait Scalar:
    Num + Signed + Copy + PartialOrd + FromPrimitive + Debug + Send + Sync + 'static
{
    /// Lossy conversion used for reporting and cross-type comparisons.
    fn to_f64(self) -> f64;

    fn of_usize(v: usize) -> Self {
        <Self as FromPrimitive>::from_usize(v).expect("integer fits in scalar")
    }
}

impl Scalar for f64 {
    fn to_f64(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for Ratio<i128> {
    fn to_f64(self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

/// Floating-point scalar with transcendental functions.
pub trait Real: Scalar + Float {
    fn lit(v: f64) -> Self {
        <Self as num_traits::NumCast>::from(v).expect("literal representable")
    }
}

impl Real for f64 {}
impl Real for f32 {}
