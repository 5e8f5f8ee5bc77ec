//! Floating-point scalar abstraction shared by all numeric code.

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;
use std::fmt::{Debug, Display};

/// Real scalar usable for sampling, transforms and error bookkeeping.
///
/// Implemented for `f32` and `f64`. Index arithmetic never goes through this
/// type; it is only used for sample values, coefficients and lattice nodes.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + FftNum + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal, panicking only if the target cannot hold it.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Converts to `f64` for reporting.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Exact rational `num / den` as a scalar (rounded once).
    #[inline]
    fn ratio(num: u64, den: u64) -> Self {
        Self::of(num as f64 / den as f64)
    }
}

impl Real for f32 {}
impl Real for f64 {}
