use serde::{Deserialize, Serialize};

use super::segment::Segment;
use crate::scalar::Scalar;
use crate::trace::{Phase, Trace};

/// Per-cycle charges, energies and loss breakdown.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CycleMetrics<T> {
    pub cycle_index: usize,
    pub q_in: T,
    pub q_out: T,
    pub e_in: T,
    pub e_out: T,
    pub t_charge: T,
    pub t_discharge: T,
    pub v_sd: T,
    pub v_sc: T,
    pub eta: T,
    pub loss_charge: T,
    pub loss_rest: T,
    pub loss_discharge: T,
}

impl<T: Scalar> CycleMetrics<T> {
    /// `|q_in - q_out| / q_in`.
    pub fn charge_imbalance(&self) -> T {
        ((self.q_in - self.q_out) / self.q_in).abs()
    }

    pub fn total_loss(&self) -> T {
        self.loss_charge + self.loss_rest + self.loss_discharge
    }
}

/// Indices into the segment list that make up one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleGroup {
    pub cycle_index: usize,
    pub charge: usize,
    pub rest_high: Option<usize>,
    pub discharge: usize,
    pub rest_low: Option<usize>,
}

impl CycleGroup {
    pub fn segment_indices(&self) -> impl Iterator<Item = usize> {
        [Some(self.charge), self.rest_high, Some(self.discharge), self.rest_low]
            .into_iter()
            .flatten()
    }
}

/// Identified parameters used to apportion losses. Without a capacitance the
/// rest loss is zero; without a resistance the remaining loss is split by
/// phase duration instead of by `∫i² dt`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossModel<T> {
    pub capacitance: Option<T>,
    pub resistance: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CycleMetricsOutput<T> {
    pub cycles: Vec<CycleMetrics<T>>,
    pub groups: Vec<CycleGroup>,
    pub warnings: Vec<String>,
}

/// Groups segments into charge → (rest) → discharge → (rest) cycles. A cycle
/// begins at each charge segment; one without a discharge is skipped with a
/// warning.
pub fn group_cycles<T: Scalar>(segments: &[Segment<T>]) -> (Vec<CycleGroup>, Vec<String>) {
    let mut groups = Vec::new();
    let mut warnings = Vec::new();
    let mut ordinal = 0;
    let mut k = 0;
    while k < segments.len() {
        if segments[k].kind != Phase::Charge {
            k += 1;
            continue;
        }
        ordinal += 1;
        let charge = k;
        let mut j = k + 1;
        let rest_high = (j < segments.len() && segments[j].kind == Phase::RestHigh).then(|| {
            j += 1;
            j - 1
        });
        if j >= segments.len() || segments[j].kind != Phase::Discharge {
            warnings.push(format!(
                "cycle {ordinal} (charge starting at sample {}) has no discharge; excluded",
                segments[charge].first_index
            ));
            k = j;
            continue;
        }
        let discharge = j;
        j += 1;
        let rest_low = (j < segments.len() && segments[j].kind == Phase::RestLow).then(|| {
            j += 1;
            j - 1
        });
        groups.push(CycleGroup {
            cycle_index: ordinal,
            charge,
            rest_high,
            discharge,
            rest_low,
        });
        k = j;
    }
    (groups, warnings)
}

/// `Σ i_n (v_{n-1} + v_n)/2 Δt` and `Σ i_n Δt` over a segment: the current of
/// each sample is held over the interval ending at it while the voltage is
/// interpolated linearly.
fn integrate<T: Scalar>(trace: &Trace<T>, seg: &Segment<T>) -> (T, T, T) {
    let s = trace.samples();
    let dt = trace.sample_period();
    let half = T::lit(0.5);
    let (mut energy, mut charge, mut i_sq) = (T::zero(), T::zero(), T::zero());
    for n in seg.first_index..=seg.last_index {
        let v_prev = if n > 0 { s[n - 1].v } else { s[n].v };
        energy = energy + s[n].i * (v_prev + s[n].v) * half * dt;
        charge = charge + s[n].i * dt;
        i_sq = i_sq + s[n].i * s[n].i * dt;
    }
    (energy, charge, i_sq)
}

/// Computes metrics for every complete cycle.
pub fn cycle_metrics<T: Scalar>(
    trace: &Trace<T>,
    segments: &[Segment<T>],
    loss: &LossModel<T>,
) -> CycleMetricsOutput<T> {
    let (groups, warnings) = group_cycles(segments);
    let dt = trace.sample_period();
    let half = T::lit(0.5);
    let cycles = groups
        .iter()
        .map(|g| {
            let ch = &segments[g.charge];
            let dis = &segments[g.discharge];
            let (e_in, q_in, i2_in) = integrate(trace, ch);
            let (e_out_neg, q_out_neg, i2_out) = integrate(trace, dis);
            let (e_out, q_out) = (-e_out_neg, -q_out_neg);
            let v_sd = g
                .rest_high
                .map_or(T::zero(), |k| segments[k].v_start - segments[k].v_end);
            let v_sc = g
                .rest_low
                .map_or(T::zero(), |k| segments[k].v_end - segments[k].v_start);

            let loss_rest = loss.capacitance.map_or(T::zero(), |c| {
                [g.rest_high, g.rest_low]
                    .into_iter()
                    .flatten()
                    .map(|k| {
                        let s = &segments[k];
                        half * c * (s.v_start * s.v_start - s.v_end * s.v_end)
                    })
                    .fold(T::zero(), |a, b| a + b)
            });
            let t_charge = ch.duration(dt);
            let t_discharge = dis.duration(dt);
            let (w_in, w_out) = if loss.resistance.is_some() {
                (i2_in, i2_out)
            } else {
                (t_charge, t_discharge)
            };
            let remainder = e_in - e_out - loss_rest;
            let loss_charge = remainder * w_in / (w_in + w_out);
            let loss_discharge = remainder - loss_charge;
            CycleMetrics {
                cycle_index: g.cycle_index,
                q_in,
                q_out,
                e_in,
                e_out,
                t_charge,
                t_discharge,
                v_sd,
                v_sc,
                eta: if e_in > T::zero() { e_out / e_in } else { T::zero() },
                loss_charge,
                loss_rest,
                loss_discharge,
            }
        })
        .collect();
    CycleMetricsOutput {
        cycles,
        groups,
        warnings,
    }
}
