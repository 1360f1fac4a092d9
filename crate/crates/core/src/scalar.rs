//! Floating-point abstraction shared by every real-valued statistic.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::Serialize;

/// Real scalar type the analyses are computed in (`f32` or `f64`).
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + Serialize + 'static
{
    /// Converts an `f64` constant into this scalar.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable")
    }

    /// Converts a count or index.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    /// Converts an exact integer.
    fn of_i128(n: i128) -> Self {
        Self::from_i128(n).expect("i128 representable")
    }

    /// Lossy view as `f64`, for reporting.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
