//! Ordinary least squares for a straight line.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit<T> {
    pub slope: T,
    pub intercept: T,
    /// Coefficient of determination.
    pub r_squared: T,
    pub n: usize,
}

/// Fits `y = slope * x + intercept`. Centered sums keep the slope accurate
/// when `x` carries a large offset (e.g. absolute time).
pub fn fit_line<T: Scalar>(x: &[T], y: &[T]) -> Result<LineFit<T>> {
    if x.len() != y.len() {
        return Err(Error::invalid("fit", "x and y lengths differ"));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData("line fit needs two points".into()));
    }
    let n = T::from_usize_lossy(x.len());
    let mx = x.iter().fold(T::zero(), |a, &v| a + v) / n;
    let my = y.iter().fold(T::zero(), |a, &v| a + v) / n;
    let (mut sxx, mut sxy, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxx = sxx + dx * dx;
        sxy = sxy + dx * dy;
        syy = syy + dy * dy;
    }
    let scale = x.iter().fold(T::zero(), |a, &v| a.max(v.abs())).max(T::one());
    if !(sxx > T::epsilon() * scale * scale * n) {
        return Err(Error::RankDeficientFit);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > T::zero() {
        let ss_res = y
            .iter()
            .zip(x)
            .fold(T::zero(), |a, (&yi, &xi)| {
                let r = yi - (slope * xi + intercept);
                a + r * r
            });
        T::one() - ss_res / syy
    } else {
        T::one()
    };
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
        n: x.len(),
    })
}
