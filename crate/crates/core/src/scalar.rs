//! Scalar abstraction shared by every model in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type the models are generic over (`f32` or `f64`).
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only if the type cannot represent finite `f64`s,
    /// which never happens for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize fits in float")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Slack used when comparing a simulated voltage against a threshold.
    #[inline]
    fn threshold_slack(scale: Self) -> Self {
        Self::epsilon().sqrt() * scale
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Arithmetic mean and sample standard deviation. Empty input yields `None`.
pub(crate) fn mean_std<T: Scalar>(values: &[T]) -> Option<(T, T)> {
    if values.is_empty() {
        return None;
    }
    let n = T::from_usize_lossy(values.len());
    let mean = values.iter().fold(T::zero(), |acc, &v| acc + v) / n;
    if values.len() < 2 {
        return Some((mean, T::zero()));
    }
    let ss = values
        .iter()
        .fold(T::zero(), |acc, &v| acc + (v - mean) * (v - mean));
    Some((mean, (ss / (n - T::one())).sqrt()))
}
