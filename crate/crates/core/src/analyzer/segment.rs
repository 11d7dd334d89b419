use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::trace::{Phase, Trace};

/// A maximal run of samples belonging to one protocol phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment<T> {
    pub kind: Phase,
    pub first_index: usize,
    pub last_index: usize,
    pub v_start: T,
    pub v_end: T,
    pub t_start: T,
    pub t_end: T,
}

impl<T: Scalar> Segment<T> {
    pub fn len(&self) -> usize {
        self.last_index - self.first_index + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Time covered when each sample stands for one sample period.
    pub fn duration(&self, sample_period: T) -> T {
        sample_period * T::from_usize_lossy(self.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Level {
    Charge,
    Discharge,
    Rest,
}

#[derive(Debug, Clone, Copy)]
struct Run {
    level: Level,
    first: usize,
    last: usize,
}

/// Splits a trace into charge, rest and discharge segments by current level.
///
/// Samples with `|i|` above `i_threshold_frac * max|i|` are active; the rest
/// are open-circuit and take their label (high or low) from the preceding
/// active phase. Runs shorter than `min_segment` seconds are folded into the
/// preceding run (the following one at the very start of the trace).
pub fn segment<T: Scalar>(
    trace: &Trace<T>,
    i_threshold_frac: T,
    min_segment: T,
) -> Result<Vec<Segment<T>>> {
    if !(i_threshold_frac > T::zero() && i_threshold_frac < T::lit(0.5)) {
        return Err(Error::invalid("i_threshold_frac", "must lie in (0, 0.5)"));
    }
    if !(min_segment >= T::zero()) {
        return Err(Error::invalid("min_segment", "must be non-negative"));
    }
    let samples = trace.samples();
    let i_max = samples.iter().fold(T::zero(), |a, s| a.max(s.i.abs()));
    if !(i_max > T::zero()) {
        return Err(Error::NoCyclesFound);
    }
    let threshold = i_threshold_frac * i_max;
    let level = |i: T| {
        if i > threshold {
            Level::Charge
        } else if i < -threshold {
            Level::Discharge
        } else {
            Level::Rest
        }
    };

    let mut raw: Vec<Run> = Vec::new();
    for (k, s) in samples.iter().enumerate() {
        let l = level(s.i);
        match raw.last_mut() {
            Some(r) if r.level == l => r.last = k,
            _ => raw.push(Run {
                level: l,
                first: k,
                last: k,
            }),
        }
    }

    let dt = trace.sample_period();
    let short = |r: &Run| dt * T::from_usize_lossy(r.last - r.first + 1) < min_segment;
    let mut merged: Vec<Run> = Vec::new();
    let mut pending_head: Option<usize> = None;
    for r in raw {
        if let Some(prev) = merged.last_mut() {
            if short(&r) || prev.level == r.level {
                prev.last = r.last;
                continue;
            }
            merged.push(r);
        } else if short(&r) {
            pending_head.get_or_insert(r.first);
        } else {
            merged.push(Run {
                first: pending_head.take().unwrap_or(r.first),
                ..r
            });
        }
    }
    // Absorbed glitches can leave neighbours of equal level.
    let mut runs: Vec<Run> = Vec::new();
    for r in merged {
        match runs.last_mut() {
            Some(prev) if prev.level == r.level => prev.last = r.last,
            _ => runs.push(r),
        }
    }
    if !runs.iter().any(|r| r.level != Level::Rest) {
        return Err(Error::NoCyclesFound);
    }

    let mut out = Vec::with_capacity(runs.len());
    let mut last_active: Option<Phase> = None;
    for r in &runs {
        let kind = match r.level {
            Level::Charge => Phase::Charge,
            Level::Discharge => Phase::Discharge,
            Level::Rest => match last_active {
                Some(Phase::Charge) => Phase::RestHigh,
                _ => Phase::RestLow,
            },
        };
        if kind.is_active() {
            if last_active == Some(kind) {
                return Err(Error::MalformedProtocol {
                    index: r.first,
                    reason: format!("two consecutive {} phases", kind.label()),
                });
            }
            last_active = Some(kind);
        }
        out.push(Segment {
            kind,
            first_index: r.first,
            last_index: r.last,
            v_start: samples[r.first].v,
            v_end: samples[r.last].v,
            t_start: samples[r.first].t,
            t_end: samples[r.last].t,
        });
    }
    Ok(out)
}
