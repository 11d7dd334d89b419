use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fixtures::{table2, table4, PaperDevice};
use super::selfdischarge::{SelfDischargeModel, MIN_FIT_QUALITY};
use crate::analyzer::{analyze, AnalyzerConfig};
use crate::error::{Error, Result};
use crate::model::{charge_duration, efficiency_no_rest, efficiency_with_rest, CycleSpec, DeviceParams};
use crate::scalar::Scalar;
use crate::simulator::{run_protocol, AcquisitionConfig};

/// Per-unit levels used for the measured tables.
pub const DEFAULT_LEVELS: [f64; 6] = [0.0, 0.25, 0.5, 0.7, 0.9, 1.0];

/// Rest duration the self-discharge table was measured at (s).
pub const REFERENCE_REST_S: f64 = 1800.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridMethod {
    /// Closed-form efficiency, with rest voltages from a fitted model if given.
    ClosedForm,
    /// Simulate the protocol and analyze the trace for every cell.
    Simulated,
    /// The measured tables for the 10, 50 and 100 F cells.
    PaperFixture,
}

/// Open-circuit rest after every charge and discharge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestSetting<T> {
    /// Rest duration (s).
    pub duration: T,
    pub model: SelfDischargeModel<T>,
}

/// Settings for [`GridMethod::Simulated`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationSettings<T> {
    pub cycles: usize,
    /// Upper bound on the sample period (s).
    pub max_sample_period: T,
    /// The sample period is shortened so each charge spans at least this many samples.
    pub samples_per_charge: usize,
}

impl<T: Scalar> Default for SimulationSettings<T> {
    fn default() -> Self {
        Self {
            cycles: 20,
            max_sample_period: T::lit(0.1),
            samples_per_charge: 500,
        }
    }
}

/// Efficiency over per-unit `(vm, vM)` windows. `eta[r][c]` belongs to
/// `vm_levels[r]` and `vmax_levels[c]`; `None` marks cells that are outside
/// the domain (`vM <= vm`) or have no valid cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyGrid<T> {
    pub vm_levels: Vec<T>,
    pub vmax_levels: Vec<T>,
    pub eta: Vec<Vec<Option<T>>>,
    pub method: GridMethod,
    pub rest: bool,
    /// Rest voltages come from a model fitted outside its measured conditions.
    pub extrapolated: bool,
    pub notes: Vec<String>,
}

impl<T: Scalar> EfficiencyGrid<T> {
    /// Efficiency at exactly the given levels, if the cell exists and is defined.
    pub fn get(&self, vm: T, vmax: T) -> Option<T> {
        let r = self.vm_levels.iter().position(|&l| level_eq(l, vm))?;
        let c = self.vmax_levels.iter().position(|&l| level_eq(l, vmax))?;
        self.eta[r][c]
    }

    /// `(vm, vM, eta)` for every defined cell in row-major order.
    pub fn defined_cells(&self) -> impl Iterator<Item = (T, T, T)> + '_ {
        self.eta.iter().enumerate().flat_map(move |(r, row)| {
            row.iter()
                .enumerate()
                .filter_map(move |(c, e)| e.map(|e| (self.vm_levels[r], self.vmax_levels[c], e)))
        })
    }

    /// Number of rows and of columns holding at least one defined cell.
    pub fn defined_extent(&self) -> (usize, usize) {
        let rows = self.eta.iter().filter(|row| row.iter().any(Option::is_some)).count();
        let cols = (0..self.vmax_levels.len())
            .filter(|&c| self.eta.iter().any(|row| row[c].is_some()))
            .count();
        (rows, cols)
    }
}

fn level_eq<T: Scalar>(a: T, b: T) -> bool {
    (a - b).abs() <= T::lit(1e-9)
}

fn check_levels<T: Scalar>(levels: &[T]) -> Result<()> {
    if levels.len() < 2 {
        return Err(Error::invalid("levels", "need at least two levels"));
    }
    if levels.iter().any(|&l| !(l >= T::zero() && l <= T::one())) {
        return Err(Error::invalid("levels", "every level must lie in [0, 1]"));
    }
    if levels.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("levels", "levels must be strictly increasing"));
    }
    Ok(())
}

/// Builds an efficiency grid with default simulation settings.
pub fn build_grid<T: Scalar>(
    p: &DeviceParams<T>,
    i_c: T,
    levels: &[T],
    rest: Option<&RestSetting<T>>,
    method: GridMethod,
) -> Result<EfficiencyGrid<T>> {
    build_grid_with(p, i_c, levels, rest, method, &SimulationSettings::default())
}

pub fn build_grid_with<T: Scalar>(
    p: &DeviceParams<T>,
    i_c: T,
    levels: &[T],
    rest: Option<&RestSetting<T>>,
    method: GridMethod,
    sim: &SimulationSettings<T>,
) -> Result<EfficiencyGrid<T>> {
    p.validate()?;
    if method == GridMethod::PaperFixture {
        return fixture_grid(p, rest.is_some());
    }
    check_levels(levels)?;
    if !(i_c > T::zero() && i_c.is_finite()) {
        return Err(Error::invalid("i_c", "must be positive and finite"));
    }
    let mut notes = Vec::new();
    let mut extrapolated = false;
    if let Some(r) = rest {
        if !(r.duration >= T::zero() && r.duration.is_finite()) {
            return Err(Error::invalid("rest.duration", "must be non-negative and finite"));
        }
        if method == GridMethod::ClosedForm {
            r.model.ensure_usable(T::lit(MIN_FIT_QUALITY))?;
            let same_device = PaperDevice::from_capacitance(p.c_main.as_f64()) == Some(PaperDevice::C50);
            let same_rest = (r.duration.as_f64() - REFERENCE_REST_S).abs() < 1e-9;
            if !same_device || !same_rest {
                extrapolated = true;
                notes.push(format!(
                    "rest model measured on a 50 F cell with {REFERENCE_REST_S} s rests; applied to {} F with {} s rests (extrapolation)",
                    p.c_main, r.duration
                ));
            }
        } else {
            notes.push("simulated rests use the device's own redistribution and leakage; the fitted model is not used".into());
        }
    }

    let vm_levels = levels[..levels.len() - 1].to_vec();
    let vmax_levels = levels[1..].to_vec();
    let cells: Vec<(usize, usize)> = (0..vm_levels.len())
        .flat_map(|r| (0..vmax_levels.len()).map(move |c| (r, c)))
        .collect();
    let evaluate = |&(r, c): &(usize, usize)| -> (Option<T>, Option<String>) {
        let (vm, vmax) = (vm_levels[r], vmax_levels[c]);
        if !(vmax > vm) {
            return (None, None);
        }
        let s = CycleSpec::new(i_c, vm * p.v_rated, vmax * p.v_rated);
        let result = match method {
            GridMethod::ClosedForm => closed_form_cell(p, &s, rest),
            _ => simulated_cell(p, s, rest, sim),
        };
        match result {
            Ok(eta) if eta > T::zero() && eta <= T::one() => (Some(eta), None),
            Ok(eta) => (None, Some(format!("cell ({vm}, {vmax}): efficiency {eta} outside (0, 1]"))),
            Err(Error::WindowTooNarrow { .. }) => (None, None),
            Err(e) => (None, Some(format!("cell ({vm}, {vmax}): {e}"))),
        }
    };
    let values: Vec<(Option<T>, Option<String>)> = match method {
        GridMethod::Simulated => cells.par_iter().map(evaluate).collect(),
        _ => cells.iter().map(evaluate).collect(),
    };
    let mut eta = vec![vec![None; vmax_levels.len()]; vm_levels.len()];
    for (&(r, c), (e, note)) in cells.iter().zip(values) {
        eta[r][c] = e;
        notes.extend(note);
    }
    Ok(EfficiencyGrid {
        vm_levels,
        vmax_levels,
        eta,
        method,
        rest: rest.is_some(),
        extrapolated,
        notes,
    })
}

fn closed_form_cell<T: Scalar>(
    p: &DeviceParams<T>,
    s: &CycleSpec<T>,
    rest: Option<&RestSetting<T>>,
) -> Result<T> {
    match rest {
        None => efficiency_no_rest(p, s),
        Some(r) => {
            // the rest form has no IR feasibility check of its own
            efficiency_no_rest(p, s)?;
            efficiency_with_rest(p, s, &r.model.predict(s.v_max - s.v_min))
        }
    }
}

fn simulated_cell<T: Scalar>(
    p: &DeviceParams<T>,
    s: CycleSpec<T>,
    rest: Option<&RestSetting<T>>,
    sim: &SimulationSettings<T>,
) -> Result<T> {
    let t_charge = charge_duration(p, &s)?;
    let dt = sim
        .max_sample_period
        .min(t_charge / T::from_usize_lossy(sim.samples_per_charge.max(1)));
    let s = match rest {
        Some(r) => s.with_rests(r.duration, r.duration),
        None => s,
    }
    .with_max_cycles(sim.cycles);
    let run = run_protocol(p, &s, &AcquisitionConfig::default().with_sample_period(dt))?;
    let report = analyze(&run.trace, &AnalyzerConfig::default())?;
    Ok(report.steady.mean.eta)
}

fn fixture_grid<T: Scalar>(p: &DeviceParams<T>, rest: bool) -> Result<EfficiencyGrid<T>> {
    let device = PaperDevice::from_capacitance(p.c_main.as_f64()).ok_or_else(|| {
        Error::invalid(
            "device.c_main",
            format!("measured tables exist only for 10, 50 and 100 F, got {}", p.c_main),
        )
    })?;
    let rows = if rest { table4::<T>() } else { table2::<T>() };
    let levels: Vec<T> = DEFAULT_LEVELS.iter().map(|&l| T::lit(l)).collect();
    let vm_levels = levels[..levels.len() - 1].to_vec();
    let vmax_levels = levels[1..].to_vec();
    let mut eta = vec![vec![None; vmax_levels.len()]; vm_levels.len()];
    for row in &rows {
        let r = vm_levels.iter().position(|&l| level_eq(l, row.vm_pu));
        let c = vmax_levels.iter().position(|&l| level_eq(l, row.vmax_pu));
        if let (Some(r), Some(c)) = (r, c) {
            eta[r][c] = Some(row.for_device(device));
        }
    }
    Ok(EfficiencyGrid {
        vm_levels,
        vmax_levels,
        eta,
        method: GridMethod::PaperFixture,
        rest,
        extrapolated: false,
        notes: vec![format!(
            "measured values for the {} cell at {} A{}",
            device.label(),
            device.test_current(),
            if rest { " with 1800 s rests" } else { "" }
        )],
    })
}
