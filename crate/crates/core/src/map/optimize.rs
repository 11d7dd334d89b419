use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::grid::EfficiencyGrid;
use super::selfdischarge::SelfDischargeModel;
use crate::error::{Error, Result};
use crate::model::{
    efficiency_no_rest, efficiency_with_rest, usable_energy_fraction, CycleSpec, DeviceParams,
    OperatingWindow,
};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint<T> {
    pub window: OperatingWindow<T>,
    pub eta: T,
    pub energy_fraction: T,
}

/// What the optimizer maximizes.
#[derive(Debug, Clone, Copy)]
pub enum Objective<'a, T> {
    /// Closed-form efficiency, optionally with rest voltages from a fitted model.
    ClosedForm {
        device: &'a DeviceParams<T>,
        i_c: T,
        rest: Option<&'a SelfDischargeModel<T>>,
    },
    /// Defined cells of a precomputed grid.
    Grid(&'a EfficiencyGrid<T>),
}

impl<T: Scalar> Objective<'_, T> {
    /// Efficiency at a per-unit window.
    pub fn evaluate(&self, vm: T, vmax: T) -> Result<T> {
        match *self {
            Objective::ClosedForm { device, i_c, rest } => {
                let s = CycleSpec::new(i_c, vm * device.v_rated, vmax * device.v_rated);
                let eta = efficiency_no_rest(device, &s)?;
                match rest {
                    None => Ok(eta),
                    Some(m) => efficiency_with_rest(device, &s, &m.predict(s.v_max - s.v_min)),
                }
            }
            Objective::Grid(g) => g.get(vm, vmax).ok_or_else(|| {
                Error::invalid("window", format!("grid has no defined cell at ({vm}, {vmax})"))
            }),
        }
    }
}

/// Slack on the energy constraint so that e.g. `(0.5, 1)` satisfies `f = 0.75`.
fn feasible<T: Scalar>(vm: T, vmax: T, f: T) -> bool {
    vmax * vmax - vm * vm >= f - T::lit(1e-12)
}

fn point<T: Scalar>(vm: T, vmax: T, eta: T) -> Result<OperatingPoint<T>> {
    let window = OperatingWindow::new(vm, vmax)?;
    Ok(OperatingPoint {
        window,
        eta,
        energy_fraction: usable_energy_fraction(&window),
    })
}

/// Higher efficiency wins; ties go to the larger energy fraction, then the larger `vm`.
fn better<T: Scalar>(a: &OperatingPoint<T>, b: &OperatingPoint<T>) -> bool {
    let key = |p: &OperatingPoint<T>| (p.eta, p.energy_fraction, p.window.min_pu);
    let (ea, fa, va) = key(a);
    let (eb, fb, vb) = key(b);
    match ea.partial_cmp(&eb) {
        Some(Ordering::Greater) => true,
        Some(Ordering::Less) | None => false,
        Some(Ordering::Equal) => match fa.partial_cmp(&fb) {
            Some(Ordering::Greater) => true,
            Some(Ordering::Equal) => va > vb,
            _ => false,
        },
    }
}

/// Maximizes efficiency over windows with `vM² - vm² >= energy_fraction_min`.
pub fn optimize_window<T: Scalar>(
    objective: &Objective<'_, T>,
    energy_fraction_min: T,
) -> Result<OperatingPoint<T>> {
    let f = energy_fraction_min;
    if !(f > T::zero()) {
        return Err(Error::invalid("energy_fraction_min", "must be positive"));
    }
    if f > T::one() {
        return Err(Error::InfeasibleEnergyRequirement(f.as_f64()));
    }
    if f == T::one() {
        let eta = objective
            .evaluate(T::zero(), T::one())
            .map_err(|_| Error::InfeasibleEnergyRequirement(f.as_f64()))?;
        return point(T::zero(), T::one(), eta);
    }
    match objective {
        Objective::ClosedForm { rest: None, .. } => {
            // efficiency grows with both voltages, so the constraint binds at vM = 1
            let vm = (T::one() - f).sqrt();
            point(vm, T::one(), objective.evaluate(vm, T::one())?)
        }
        Objective::ClosedForm { .. } => search_continuous(objective, f),
        Objective::Grid(g) => search_grid(g, f),
    }
}

fn search_grid<T: Scalar>(g: &EfficiencyGrid<T>, f: T) -> Result<OperatingPoint<T>> {
    let mut best: Option<OperatingPoint<T>> = None;
    for (vm, vmax, eta) in g.defined_cells() {
        if !feasible(vm, vmax, f) {
            continue;
        }
        let cand = point(vm, vmax, eta)?;
        if best.as_ref().is_none_or(|b| better(&cand, b)) {
            best = Some(cand);
        }
    }
    best.ok_or(Error::InfeasibleEnergyRequirement(f.as_f64()))
}

/// Coarse scan of the feasible triangle plus the constraint boundary, then a
/// finer scan around the best point. The boundary point `(√(1-f), 1)` is
/// always a candidate.
fn search_continuous<T: Scalar>(obj: &Objective<'_, T>, f: T) -> Result<OperatingPoint<T>> {
    let mut best: Option<OperatingPoint<T>> = None;
    let boundary_vm = |vmax: T| (vmax * vmax - f).max(T::zero()).sqrt();

    let coarse = 200usize;
    let step = T::one() / T::from_usize_lossy(coarse);
    for a in 0..=coarse {
        let vmax = T::from_usize_lossy(a) * step;
        consider(obj, f, &mut best, boundary_vm(vmax), vmax);
        for b in 0..a {
            consider(obj, f, &mut best, T::from_usize_lossy(b) * step, vmax);
        }
    }
    consider(obj, f, &mut best, boundary_vm(T::one()), T::one());

    let Some(centre) = best else {
        return Err(Error::InfeasibleEnergyRequirement(f.as_f64()));
    };
    let fine = 100usize;
    let h = T::lit(2.0) * step / T::from_usize_lossy(fine);
    let (vm0, vmax0) = (centre.window.min_pu - step, centre.window.max_pu - step);
    for a in 0..=fine {
        let vmax = (vmax0 + T::from_usize_lossy(a) * h).min(T::one());
        consider(obj, f, &mut best, boundary_vm(vmax), vmax);
        for b in 0..=fine {
            consider(obj, f, &mut best, vm0 + T::from_usize_lossy(b) * h, vmax);
        }
    }
    best.ok_or(Error::InfeasibleEnergyRequirement(f.as_f64()))
}

fn consider<T: Scalar>(
    obj: &Objective<'_, T>,
    f: T,
    best: &mut Option<OperatingPoint<T>>,
    vm: T,
    vmax: T,
) {
    if !(vm >= T::zero() && vmax > vm && vmax <= T::one() && feasible(vm, vmax, f)) {
        return;
    }
    let Ok(cand) = obj.evaluate(vm, vmax).and_then(|eta| point(vm, vmax, eta)) else {
        return;
    };
    if best.as_ref().is_none_or(|b| better(&cand, b)) {
        *best = Some(cand);
    }
}
