//! Uniformly sampled `(t, v, i)` series and their CSV encodings.
//!
//! Sign convention: positive current charges the device.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const TRACE_HEADER: &str = "t_s,v_V,i_A";
pub const SIDECAR_HEADER: &str = "cycle,phase,t_start_s,t_end_s";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample<T> {
    pub t: T,
    pub v: T,
    pub i: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace<T> {
    samples: Vec<Sample<T>>,
    sample_period: T,
    pub meta: BTreeMap<String, String>,
}

impl<T: Scalar> Trace<T> {
    /// Builds a trace and checks its invariants: finite values, strictly
    /// increasing time, spacing uniform to 1e-6 relative (relaxed to the
    /// scalar's resolution at large `t` for `f32`).
    pub fn new(samples: Vec<Sample<T>>, sample_period: T) -> Result<Self> {
        if !(sample_period.is_finite() && sample_period > T::zero()) {
            return Err(Error::InvalidTrace(format!(
                "sample period must be positive, got {sample_period}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::InvalidTrace("no samples".into()));
        }
        let t_last = samples[samples.len() - 1].t.abs();
        let tol = (T::lit(1e-6) * sample_period).max(T::lit(8.0) * T::epsilon() * t_last);
        for (k, s) in samples.iter().enumerate() {
            if !(s.t.is_finite() && s.v.is_finite() && s.i.is_finite()) {
                return Err(Error::InvalidTrace(format!("non-finite value at sample {k}")));
            }
            if k > 0 {
                let dt = s.t - samples[k - 1].t;
                if !(dt > T::zero()) {
                    return Err(Error::InvalidTrace(format!(
                        "time not strictly increasing at sample {k}"
                    )));
                }
                if (dt - sample_period).abs() > tol {
                    return Err(Error::InvalidTrace(format!(
                        "non-uniform spacing at sample {k}: {dt} vs {sample_period}"
                    )));
                }
            }
        }
        Ok(Self {
            samples,
            sample_period,
            meta: BTreeMap::new(),
        })
    }

    /// Builds a trace, taking the sample period from the mean spacing.
    pub fn from_samples(samples: Vec<Sample<T>>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidTrace("need at least two samples".into()));
        }
        let span = samples[samples.len() - 1].t - samples[0].t;
        let period = span / T::from_usize_lossy(samples.len() - 1);
        Self::new(samples, period)
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.meta.insert(key.into(), value.to_string());
        self
    }

    pub fn samples(&self) -> &[Sample<T>] {
        &self.samples
    }

    pub fn sample_period(&self) -> T {
        self.sample_period
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Applies `f` to every sample. Timing is left untouched.
    pub fn map_samples(&self, mut f: impl FnMut(Sample<T>) -> Sample<T>) -> Self {
        Self {
            samples: self.samples.iter().map(|&s| f(s)).collect(),
            sample_period: self.sample_period,
            meta: self.meta.clone(),
        }
    }

    /// Writes the CSV encoding: header `t_s,v_V,i_A`, LF endings, at most 9
    /// significant digits per field.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{TRACE_HEADER}")?;
        for s in &self.samples {
            writeln!(
                out,
                "{},{},{}",
                Sig9(s.t.as_f64()),
                Sig9(s.v.as_f64()),
                Sig9(s.i.as_f64())
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    /// Parses the CSV encoding. Errors carry the 1-based line number.
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut samples = Vec::new();
        let mut seen_header = false;
        let mut line_no = 0;
        for line in input.lines() {
            line_no += 1;
            let line = line?;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if !seen_header {
                if line.trim() != TRACE_HEADER {
                    return Err(Error::Parse {
                        line: line_no,
                        reason: format!("expected header `{TRACE_HEADER}`, found `{line}`"),
                    });
                }
                seen_header = true;
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: line_no,
                    reason: format!("expected 3 fields, found {}", fields.len()),
                });
            }
            let t = parse_field::<T>(fields[0], line_no, "t_s")?;
            let v = parse_field::<T>(fields[1], line_no, "v_V")?;
            let i = parse_field::<T>(fields[2], line_no, "i_A")?;
            samples.push(Sample { t, v, i });
        }
        if !seen_header {
            return Err(Error::Parse {
                line: 1,
                reason: "empty input".into(),
            });
        }
        Self::from_samples(samples).map_err(|e| Error::Parse {
            line: line_no,
            reason: e.to_string(),
        })
    }
}

fn parse_field<T: Scalar>(raw: &str, line: usize, name: &str) -> Result<T> {
    let x = f64::from_str(raw.trim()).map_err(|_| Error::Parse {
        line,
        reason: format!("field `{name}` is not a number: `{raw}`"),
    })?;
    if !x.is_finite() {
        return Err(Error::Parse {
            line,
            reason: format!("field `{name}` is not finite"),
        });
    }
    Ok(T::lit(x))
}

/// Decimal formatting with at most nine significant digits and no exponent.
pub struct Sig9(pub f64);

impl fmt::Display for Sig9 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let x = self.0;
        if x == 0.0 || !x.is_finite() {
            return f.write_str("0");
        }
        let rounded: f64 = format!("{x:.8e}").parse().map_err(|_| fmt::Error)?;
        if rounded == 0.0 {
            return f.write_str("0");
        }
        write!(f, "{rounded}")
    }
}

/// Protocol phase of a cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Charge,
    RestHigh,
    Discharge,
    RestLow,
}

impl Phase {
    pub fn label(self) -> &'static str {
        match self {
            Phase::Charge => "charge",
            Phase::RestHigh => "rest_high",
            Phase::Discharge => "discharge",
            Phase::RestLow => "rest_low",
        }
    }

    pub fn is_active(self) -> bool {
        matches!(self, Phase::Charge | Phase::Discharge)
    }

    /// Successor in the charge, rest-high, discharge, rest-low order.
    pub fn next(self) -> Phase {
        match self {
            Phase::Charge => Phase::RestHigh,
            Phase::RestHigh => Phase::Discharge,
            Phase::Discharge => Phase::RestLow,
            Phase::RestLow => Phase::Charge,
        }
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "charge" => Ok(Phase::Charge),
            "rest_high" => Ok(Phase::RestHigh),
            "discharge" => Ok(Phase::Discharge),
            "rest_low" => Ok(Phase::RestLow),
            other => Err(Error::invalid("phase", format!("unknown label `{other}`"))),
        }
    }
}

/// Ground-truth interval of one protocol phase. Current flows over
/// `(t_start, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpan<T> {
    pub cycle: usize,
    pub phase: Phase,
    pub t_start: T,
    pub t_end: T,
}

pub fn write_sidecar<T: Scalar, W: Write>(spans: &[PhaseSpan<T>], mut out: W) -> Result<()> {
    writeln!(out, "{SIDECAR_HEADER}")?;
    for s in spans {
        writeln!(
            out,
            "{},{},{},{}",
            s.cycle,
            s.phase.label(),
            Sig9(s.t_start.as_f64()),
            Sig9(s.t_end.as_f64())
        )?;
    }
    Ok(())
}

pub fn read_sidecar<T: Scalar, R: BufRead>(input: R) -> Result<Vec<PhaseSpan<T>>> {
    let mut spans = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line_no = k + 1;
        let line = line?;
        if k == 0 {
            if line.trim() != SIDECAR_HEADER {
                return Err(Error::Parse {
                    line: 1,
                    reason: format!("expected header `{SIDECAR_HEADER}`"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(Error::Parse {
                line: line_no,
                reason: format!("expected 4 fields, found {}", f.len()),
            });
        }
        let cycle = f[0].trim().parse().map_err(|_| Error::Parse {
            line: line_no,
            reason: format!("bad cycle `{}`", f[0]),
        })?;
        let phase = f[1].trim().parse().map_err(|e: Error| Error::Parse {
            line: line_no,
            reason: e.to_string(),
        })?;
        spans.push(PhaseSpan {
            cycle,
            phase,
            t_start: parse_field(f[2], line_no, "t_start_s")?,
            t_end: parse_field(f[3], line_no, "t_end_s")?,
        });
    }
    Ok(spans)
}
