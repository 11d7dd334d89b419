use serde::{Deserialize, Serialize};

use super::metrics::CycleMetrics;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Which averaging rule produced the reporting window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowRule {
    /// Cycles 17 to 20 of a run with at least 20 cycles.
    Cycles17To20,
    /// Up to four last cycles of the steady tail.
    LastSteady,
    /// Charge balance never settled; last four cycles, flagged.
    LastUnsteady,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyReport<T> {
    pub steady_from_cycle: Option<usize>,
    /// Inclusive `(first, last)` cycle indices averaged into `mean`.
    pub window: (usize, usize),
    pub window_rule: WindowRule,
    /// Set when no steady state was found.
    pub flagged: bool,
    /// Field-wise mean over the window (`cycle_index` is 0).
    pub mean: CycleMetrics<T>,
    pub per_cycle: Vec<CycleMetrics<T>>,
}

/// Finds the first cycle from which `|q_in - q_out| / q_in < tol` holds for
/// every remaining cycle and averages the reporting window.
pub fn detect_steady<T: Scalar>(per_cycle: &[CycleMetrics<T>], tol: T) -> Result<SteadyReport<T>> {
    if per_cycle.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "steady-state detection needs at least 2 cycles, got {}",
            per_cycle.len()
        )));
    }
    let ok: Vec<bool> = per_cycle
        .iter()
        .map(|c| c.q_in > T::zero() && c.charge_imbalance() < tol)
        .collect();
    let tail_start = ok.iter().rposition(|&b| !b).map_or(0, |k| k + 1);
    let steady_pos = (tail_start < per_cycle.len()).then_some(tail_start);

    let pos_of = |idx: usize| per_cycle.iter().position(|c| c.cycle_index == idx);
    let (range, rule) = match (pos_of(17), pos_of(20)) {
        (Some(a), Some(b)) if b - a == 3 => (a..=b, WindowRule::Cycles17To20),
        _ => match steady_pos {
            Some(start) => {
                let end = per_cycle.len() - 1;
                (start.max(end.saturating_sub(3))..=end, WindowRule::LastSteady)
            }
            None => {
                let end = per_cycle.len() - 1;
                (end.saturating_sub(3)..=end, WindowRule::LastUnsteady)
            }
        },
    };
    let window_cycles = &per_cycle[range.clone()];
    Ok(SteadyReport {
        steady_from_cycle: steady_pos.map(|k| per_cycle[k].cycle_index),
        window: (
            per_cycle[*range.start()].cycle_index,
            per_cycle[*range.end()].cycle_index,
        ),
        window_rule: rule,
        flagged: steady_pos.is_none(),
        mean: mean_metrics(window_cycles),
        per_cycle: per_cycle.to_vec(),
    })
}

fn mean_metrics<T: Scalar>(cycles: &[CycleMetrics<T>]) -> CycleMetrics<T> {
    let n = T::from_usize_lossy(cycles.len());
    let avg = |f: fn(&CycleMetrics<T>) -> T| cycles.iter().map(f).fold(T::zero(), |a, b| a + b) / n;
    CycleMetrics {
        cycle_index: 0,
        q_in: avg(|c| c.q_in),
        q_out: avg(|c| c.q_out),
        e_in: avg(|c| c.e_in),
        e_out: avg(|c| c.e_out),
        t_charge: avg(|c| c.t_charge),
        t_discharge: avg(|c| c.t_discharge),
        v_sd: avg(|c| c.v_sd),
        v_sc: avg(|c| c.v_sc),
        eta: avg(|c| c.eta),
        loss_charge: avg(|c| c.loss_charge),
        loss_rest: avg(|c| c.loss_rest),
        loss_discharge: avg(|c| c.loss_discharge),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycles(ratios: &[f64]) -> Vec<CycleMetrics<f64>> {
        ratios
            .iter()
            .enumerate()
            .map(|(k, r)| CycleMetrics {
                cycle_index: k + 1,
                q_in: 10.0,
                q_out: 10.0 * r,
                eta: 0.9 + 0.001 * k as f64,
                ..Default::default()
            })
            .collect()
    }

    #[test]
    fn monotone_sequence() {
        let r = detect_steady(&cycles(&[0.90, 0.95, 0.985, 0.995, 0.999]), 0.01).unwrap();
        assert_eq!(r.steady_from_cycle, Some(4));
        assert_eq!(r.window, (4, 5));
        assert_eq!(r.window_rule, WindowRule::LastSteady);
        assert!(!r.flagged);
    }

    #[test]
    fn balanced_from_first_cycle() {
        let r = detect_steady(&cycles(&[1.0; 6]), 0.01).unwrap();
        assert_eq!(r.steady_from_cycle, Some(1));
        assert_eq!(r.window, (3, 6));
    }

    #[test]
    fn twenty_cycles_average_17_to_20() {
        let r = detect_steady(&cycles(&[1.0; 20]), 0.01).unwrap();
        assert_eq!(r.window, (17, 20));
        assert_eq!(r.window_rule, WindowRule::Cycles17To20);
        let expect = (0..4).map(|k| 0.9 + 0.001 * (16 + k) as f64).sum::<f64>() / 4.0;
        assert!((r.mean.eta - expect).abs() < 1e-12);
    }

    #[test]
    fn relapse_resets_steady_point() {
        let r = detect_steady(&cycles(&[1.0, 1.0, 0.95, 1.0, 1.0]), 0.01).unwrap();
        assert_eq!(r.steady_from_cycle, Some(4));
    }

    #[test]
    fn never_steady_is_flagged() {
        let r = detect_steady(&cycles(&[0.9, 0.9, 0.9, 0.9, 0.9]), 0.01).unwrap();
        assert_eq!(r.steady_from_cycle, None);
        assert!(r.flagged);
        assert_eq!(r.window, (2, 5));
        assert_eq!(r.window_rule, WindowRule::LastUnsteady);
    }

    #[test]
    fn one_cycle_is_not_enough() {
        assert!(detect_steady(&cycles(&[1.0]), 0.01).is_err());
    }
}
