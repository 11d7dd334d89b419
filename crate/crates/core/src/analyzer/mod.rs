//! Trace analysis: segmentation into protocol phases, per-cycle energy and
//! charge metrics, steady-state detection and R/C identification.

mod identify;
mod metrics;
mod segment;
mod steady;

pub use identify::{identify_capacitance, identify_resistance, Estimate};
pub use metrics::{cycle_metrics, group_cycles, CycleGroup, CycleMetrics, CycleMetricsOutput, LossModel};
pub use segment::{segment, Segment};
pub use steady::{detect_steady, SteadyReport, WindowRule};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::scalar::Scalar;
use crate::trace::Trace;

pub const REPORT_SCHEMA: &str = "supercap.analysis/v1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerConfig<T> {
    /// Active-current threshold as a fraction of `max|i|`.
    pub i_threshold_frac: T,
    /// Segments shorter than this (s) are merged into their neighbour.
    pub min_segment: T,
    pub steady_tolerance: T,
}

impl<T: Scalar> Default for AnalyzerConfig<T> {
    fn default() -> Self {
        Self {
            i_threshold_frac: T::lit(0.05),
            min_segment: T::one(),
            steady_tolerance: T::lit(0.01),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport<T> {
    pub schema: String,
    pub n_samples: usize,
    pub sample_period: T,
    pub config: AnalyzerConfig<T>,
    pub segments: Vec<Segment<T>>,
    pub steady: SteadyReport<T>,
    pub resistance: Option<Estimate<T>>,
    pub capacitance: Option<Estimate<T>>,
    pub warnings: Vec<String>,
}

impl<T: Scalar + Serialize> AnalysisReport<T> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Full pipeline: segment, measure every cycle, find the steady window,
/// identify R and C on the steady cycles, then re-apportion losses with them.
pub fn analyze<T: Scalar>(trace: &Trace<T>, cfg: &AnalyzerConfig<T>) -> Result<AnalysisReport<T>> {
    let segments = segment(trace, cfg.i_threshold_frac, cfg.min_segment)?;
    let first = cycle_metrics(trace, &segments, &LossModel::default());
    let mut warnings = first.warnings.clone();
    let steady = detect_steady(&first.cycles, cfg.steady_tolerance)?;

    let from = steady.steady_from_cycle.unwrap_or(1);
    let steady_segments: Vec<Segment<T>> = first
        .groups
        .iter()
        .filter(|g| g.cycle_index >= from)
        .flat_map(|g| g.segment_indices().collect::<Vec<_>>())
        .map(|k| segments[k])
        .collect();
    // kept in temporal order: jumps are read from adjacent segment pairs
    let resistance = match identify_resistance(trace, &steady_segments) {
        Ok(r) => Some(r),
        Err(e) => {
            warnings.push(format!("resistance not identified: {e}"));
            None
        }
    };
    let capacitance = match identify_capacitance(trace, &steady_segments) {
        Ok(c) => Some(c),
        Err(e) => {
            warnings.push(format!("capacitance not identified: {e}"));
            None
        }
    };

    let loss = LossModel {
        capacitance: capacitance.map(|c| c.value),
        resistance: resistance.map(|r| r.value),
    };
    let full = cycle_metrics(trace, &segments, &loss);
    let steady = detect_steady(&full.cycles, cfg.steady_tolerance)?;

    Ok(AnalysisReport {
        schema: REPORT_SCHEMA.to_string(),
        n_samples: trace.len(),
        sample_period: trace.sample_period(),
        config: *cfg,
        segments,
        steady,
        resistance,
        capacitance,
        warnings,
    })
}
