use serde::{Deserialize, Serialize};

use super::segment::Segment;
use crate::error::{Error, Result};
use crate::regression::fit_line;
use crate::scalar::{mean_std, Scalar};
use crate::trace::Trace;

/// Mean of several per-transition or per-segment estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate<T> {
    pub value: T,
    pub std_dev: T,
    pub count: usize,
}

impl<T: Scalar> Estimate<T> {
    fn from_values(values: &[T]) -> Option<Self> {
        mean_std(values).map(|(value, std_dev)| Self {
            value,
            std_dev,
            count: values.len(),
        })
    }
}

/// Series resistance from the voltage jump at each current interruption:
/// `|v(last active) - v(first rest)| / |i(last active)|`.
///
/// The first rest sample is one sample period after the interruption, so the
/// estimate carries up to `i Δt / C` of capacitive drift.
pub fn identify_resistance<T: Scalar>(
    trace: &Trace<T>,
    segments: &[Segment<T>],
) -> Result<Estimate<T>> {
    let s = trace.samples();
    let values: Vec<T> = segments
        .windows(2)
        .filter(|w| w[0].kind.is_active() && !w[1].kind.is_active())
        .filter_map(|w| {
            let last = &s[w[0].last_index];
            let first_rest = &s[w[1].first_index];
            (last.i.abs() > T::zero()).then(|| (last.v - first_rest.v).abs() / last.i.abs())
        })
        .collect();
    Estimate::from_values(&values).ok_or(Error::NoJumpFound)
}

/// Capacitance from the slope of the constant-current ramps, `i / (dv/dt)`,
/// fitted on the central 80% of each active segment of at least 10 samples.
pub fn identify_capacitance<T: Scalar>(
    trace: &Trace<T>,
    segments: &[Segment<T>],
) -> Result<Estimate<T>> {
    let s = trace.samples();
    let mut values = Vec::new();
    for seg in segments.iter().filter(|g| g.kind.is_active()) {
        let n = seg.len();
        if n < 10 {
            continue;
        }
        let trim = n / 10;
        let range = (seg.first_index + trim)..=(seg.last_index - trim);
        let t: Vec<T> = s[range.clone()].iter().map(|x| x.t).collect();
        let v: Vec<T> = s[range.clone()].iter().map(|x| x.v).collect();
        let i_mean = s[range.clone()]
            .iter()
            .fold(T::zero(), |a, x| a + x.i.abs())
            / T::from_usize_lossy(t.len());
        let Ok(fit) = fit_line(&t, &v) else { continue };
        if fit.slope.abs() > T::zero() {
            values.push(i_mean / fit.slope.abs());
        }
    }
    Estimate::from_values(&values).ok_or_else(|| {
        Error::InsufficientData("no active segment with at least 10 samples and a slope".into())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyzer::segment;
    use crate::trace::Sample;

    #[test]
    fn perfect_ramp_is_ten_farads() {
        let samples: Vec<_> = (0..200)
            .map(|k| Sample {
                t: k as f64 * 0.1,
                v: 0.5 + 0.004 * k as f64,
                i: 0.4,
            })
            .collect();
        let tr = Trace::new(samples, 0.1).unwrap();
        let segs = segment(&tr, 0.05, 1.0).unwrap();
        let c = identify_capacitance(&tr, &segs).unwrap();
        assert!((c.value - 10.0).abs() < 1e-9, "{}", c.value);
        assert!(matches!(identify_resistance(&tr, &segs), Err(Error::NoJumpFound)));
    }

    #[test]
    fn short_segments_are_insufficient() {
        let samples: Vec<_> = (0..8)
            .map(|k| Sample { t: k as f64 * 0.1, v: 1.0, i: 0.4 })
            .collect();
        let tr = Trace::new(samples, 0.1).unwrap();
        let segs = segment(&tr, 0.05, 0.0).unwrap();
        assert!(matches!(identify_capacitance(&tr, &segs), Err(Error::InsufficientData(_))));
    }
}
