//! Equivalent-circuit parameters, cycling protocol and the closed-form
//! round-trip efficiency relations of the series-RC model.
//!
//! All voltages here are absolute volts. Per-unit windows are converted with
//! [`OperatingWindow::to_volts`] at the boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Slow parallel RC branch that models charge redistribution inside the
/// porous electrodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Redistribution<T> {
    /// Branch capacitance (F).
    pub c_branch: T,
    /// Branch resistance (Ω).
    pub r_branch: T,
}

/// Equivalent-circuit description of a supercapacitor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams<T> {
    /// Main (fast) capacitance (F).
    pub c_main: T,
    /// Series resistance (Ω).
    pub r_series: T,
    #[serde(default)]
    pub redistribution: Option<Redistribution<T>>,
    /// Leakage resistance across the main capacitance (Ω).
    #[serde(default)]
    pub r_leak: Option<T>,
    /// Rated voltage (V); per-unit voltages are referred to this value.
    pub v_rated: T,
}

impl<T: Scalar> DeviceParams<T> {
    /// Ideal series-RC device.
    pub fn new(c_main: T, r_series: T, v_rated: T) -> Result<Self> {
        let p = Self {
            c_main,
            r_series,
            redistribution: None,
            r_leak: None,
            v_rated,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_redistribution(mut self, c_branch: T, r_branch: T) -> Result<Self> {
        self.redistribution = Some(Redistribution { c_branch, r_branch });
        self.validate()?;
        Ok(self)
    }

    pub fn with_leak(mut self, r_leak: T) -> Result<Self> {
        self.r_leak = Some(r_leak);
        self.validate()?;
        Ok(self)
    }

    /// Same device with the redistribution branch and leakage removed.
    pub fn ideal(&self) -> Self {
        Self {
            redistribution: None,
            r_leak: None,
            ..*self
        }
    }

    pub fn is_ideal(&self) -> bool {
        self.redistribution.is_none() && self.r_leak.is_none()
    }

    pub fn validate(&self) -> Result<()> {
        positive("device.c_main", self.c_main)?;
        non_negative("device.r_series", self.r_series)?;
        positive("device.v_rated", self.v_rated)?;
        if let Some(b) = &self.redistribution {
            positive("device.redistribution.c_branch", b.c_branch)?;
            positive("device.redistribution.r_branch", b.r_branch)?;
        }
        if let Some(r) = self.r_leak {
            positive("device.r_leak", r)?;
        }
        Ok(())
    }

    /// Relaxation time constant of the redistribution branch,
    /// `r_branch * c_main * c_branch / (c_main + c_branch)`.
    pub fn redistribution_tau(&self) -> Option<T> {
        self.redistribution
            .map(|b| b.r_branch * self.c_main * b.c_branch / (self.c_main + b.c_branch))
    }
}

/// One constant-current cycling test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct CycleSpec<T> {
    /// Charge and discharge current magnitude (A).
    pub i_c: T,
    pub v_min: T,
    pub v_max: T,
    /// Open-circuit rest after the charge phase (s).
    #[serde(default)]
    pub rest_after_charge: T,
    /// Open-circuit rest after the discharge phase (s).
    #[serde(default)]
    pub rest_after_discharge: T,
    #[serde(default = "default_max_cycles")]
    pub max_cycles: usize,
    /// Relative charge imbalance below which a cycle counts as steady.
    #[serde(default = "default_steady_tolerance")]
    pub steady_tolerance: T,
}

fn default_max_cycles() -> usize {
    20
}

fn default_steady_tolerance<T: Scalar>() -> T {
    T::lit(0.01)
}

impl<T: Scalar> CycleSpec<T> {
    /// Cycling without rest, 20 cycles, 1% steady tolerance.
    pub fn new(i_c: T, v_min: T, v_max: T) -> Self {
        Self {
            i_c,
            v_min,
            v_max,
            rest_after_charge: T::zero(),
            rest_after_discharge: T::zero(),
            max_cycles: default_max_cycles(),
            steady_tolerance: default_steady_tolerance(),
        }
    }

    pub fn with_rests(mut self, after_charge: T, after_discharge: T) -> Self {
        self.rest_after_charge = after_charge;
        self.rest_after_discharge = after_discharge;
        self
    }

    pub fn with_max_cycles(mut self, n: usize) -> Self {
        self.max_cycles = n;
        self
    }

    pub fn with_steady_tolerance(mut self, tol: T) -> Self {
        self.steady_tolerance = tol;
        self
    }

    pub fn has_rest(&self) -> bool {
        self.rest_after_charge > T::zero() || self.rest_after_discharge > T::zero()
    }

    /// Checks the spec on its own and against the device it will be run on.
    pub fn validate_for(&self, p: &DeviceParams<T>) -> Result<()> {
        positive("spec.i_c", self.i_c)?;
        non_negative("spec.v_min", self.v_min)?;
        if !(self.v_max > self.v_min) {
            return Err(Error::invalid(
                "spec.v_max",
                format!("must exceed v_min ({} <= {})", self.v_max, self.v_min),
            ));
        }
        if self.v_max > p.v_rated {
            return Err(Error::invalid(
                "spec.v_max",
                format!("exceeds rated voltage ({} > {})", self.v_max, p.v_rated),
            ));
        }
        non_negative("spec.rest_after_charge", self.rest_after_charge)?;
        non_negative("spec.rest_after_discharge", self.rest_after_discharge)?;
        if self.max_cycles < 1 {
            return Err(Error::invalid("spec.max_cycles", "must be at least 1"));
        }
        if !(self.steady_tolerance > T::zero() && self.steady_tolerance < T::one()) {
            return Err(Error::invalid("spec.steady_tolerance", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Open-circuit voltage drop after charging (`v_sd`) and rise after
/// discharging (`v_sc`), both in volts.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RestVoltages<T> {
    pub v_sd: T,
    pub v_sc: T,
}

impl<T: Scalar> RestVoltages<T> {
    pub fn new(v_sd: T, v_sc: T) -> Result<Self> {
        non_negative("rest.v_sd", v_sd)?;
        non_negative("rest.v_sc", v_sc)?;
        Ok(Self { v_sd, v_sc })
    }
}

/// Working voltage window in per-unit of the rated voltage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingWindow<T> {
    pub min_pu: T,
    pub max_pu: T,
}

impl<T: Scalar> OperatingWindow<T> {
    pub fn new(min_pu: T, max_pu: T) -> Result<Self> {
        if !(min_pu >= T::zero() && min_pu < max_pu && max_pu <= T::one()) {
            return Err(Error::invalid(
                "window",
                format!("need 0 <= min < max <= 1, got ({min_pu}, {max_pu})"),
            ));
        }
        Ok(Self { min_pu, max_pu })
    }

    /// `(v_min, v_max)` in volts.
    pub fn to_volts(&self, v_rated: T) -> (T, T) {
        (self.min_pu * v_rated, self.max_pu * v_rated)
    }

    pub fn span_pu(&self) -> T {
        self.max_pu - self.min_pu
    }
}

fn positive<T: Scalar>(field: &str, v: T) -> Result<()> {
    if v.is_finite() && v > T::zero() {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be positive and finite, got {v}")))
    }
}

fn non_negative<T: Scalar>(field: &str, v: T) -> Result<()> {
    if v.is_finite() && v >= T::zero() {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be non-negative and finite, got {v}")))
    }
}

/// Total resistive drop `2 i_c R` across a charge/discharge reversal.
fn double_drop<T: Scalar>(p: &DeviceParams<T>, s: &CycleSpec<T>) -> T {
    T::lit(2.0) * s.i_c * p.r_series
}

fn check_window<T: Scalar>(p: &DeviceParams<T>, s: &CycleSpec<T>) -> Result<()> {
    let window = s.v_max - s.v_min;
    let min_window = double_drop(p, s);
    if !(window > T::zero()) || !(window > min_window) {
        return Err(Error::WindowTooNarrow {
            window: window.as_f64(),
            min_window: min_window.as_f64(),
        });
    }
    Ok(())
}

/// Constant-current charge time from `v_min` to `v_max` in steady state:
/// `C (v_max - v_min - 2 i_c R) / i_c`.
pub fn charge_duration<T: Scalar>(p: &DeviceParams<T>, s: &CycleSpec<T>) -> Result<T> {
    check_window(p, s)?;
    Ok(p.c_main * (s.v_max - s.v_min - double_drop(p, s)) / s.i_c)
}

/// Round-trip efficiency of a cycle without rest,
/// `(v_max + v_min - 2 i_c R) / (v_max + v_min + 2 i_c R)`.
pub fn efficiency_no_rest<T: Scalar>(p: &DeviceParams<T>, s: &CycleSpec<T>) -> Result<T> {
    check_window(p, s)?;
    let sum = s.v_max + s.v_min;
    let drop = double_drop(p, s);
    Ok((sum - drop) / (sum + drop))
}

/// Round-trip efficiency of a cycle with open-circuit rests.
pub fn efficiency_with_rest<T: Scalar>(
    p: &DeviceParams<T>,
    s: &CycleSpec<T>,
    rv: &RestVoltages<T>,
) -> Result<T> {
    let sum = s.v_max + s.v_min;
    let drop = double_drop(p, s);
    let numerator = sum - rv.v_sd - drop;
    if !(numerator > T::zero()) {
        return Err(Error::LossesExceedDelivery {
            numerator: numerator.as_f64(),
        });
    }
    Ok(numerator / (sum + rv.v_sc + drop))
}

/// Energy supplied during the charge phase (J).
pub fn energy_in<T: Scalar>(p: &DeviceParams<T>, s: &CycleSpec<T>) -> Result<T> {
    energy_in_with_rest(p, s, &RestVoltages::default())
}

/// Energy delivered during the discharge phase (J), assuming the discharge
/// lasts as long as the charge.
pub fn energy_out<T: Scalar>(p: &DeviceParams<T>, s: &CycleSpec<T>) -> Result<T> {
    energy_out_with_rest(p, s, &RestVoltages::default())
}

/// Charge energy with the self-charge rebound `v_sc` raising the starting
/// voltage. The phase duration is the rest-free charge duration for both
/// phases, so the ratio with [`energy_out_with_rest`] is exactly
/// [`efficiency_with_rest`].
pub fn energy_in_with_rest<T: Scalar>(
    p: &DeviceParams<T>,
    s: &CycleSpec<T>,
    rv: &RestVoltages<T>,
) -> Result<T> {
    let dt = charge_duration(p, s)?;
    let mean_v = (s.v_max + s.v_min + double_drop(p, s) + rv.v_sc) / T::lit(2.0);
    Ok(s.i_c * mean_v * dt)
}

pub fn energy_out_with_rest<T: Scalar>(
    p: &DeviceParams<T>,
    s: &CycleSpec<T>,
    rv: &RestVoltages<T>,
) -> Result<T> {
    let dt = charge_duration(p, s)?;
    let mean_v = (s.v_max + s.v_min - double_drop(p, s) - rv.v_sd) / T::lit(2.0);
    if !(mean_v > T::zero()) {
        return Err(Error::LossesExceedDelivery {
            numerator: (T::lit(2.0) * mean_v).as_f64(),
        });
    }
    Ok(s.i_c * mean_v * dt)
}

/// Current at which a rest-free cycle over `window` reaches `target_eff`:
/// `(v_max + v_min)(1 - eta) / (2 R (1 + eta))`.
pub fn test_current<T: Scalar>(
    p: &DeviceParams<T>,
    target_eff: T,
    window: &OperatingWindow<T>,
) -> Result<T> {
    if !(target_eff > T::zero() && target_eff < T::one()) {
        return Err(Error::invalid("target_eff", "must lie in (0, 1)"));
    }
    if !(p.r_series > T::zero()) {
        return Err(Error::UnboundedCurrent);
    }
    let (v_min, v_max) = window.to_volts(p.v_rated);
    let i = (v_max + v_min) * (T::one() - target_eff)
        / (T::lit(2.0) * p.r_series * (T::one() + target_eff));
    // at this current the IR step alone would cross the window
    let min_window = T::lit(2.0) * i * p.r_series;
    if v_max - v_min <= min_window {
        return Err(Error::WindowTooNarrow {
            window: (v_max - v_min).as_f64(),
            min_window: min_window.as_f64(),
        });
    }
    Ok(i)
}

/// Share of the maximum stored energy reachable inside the window,
/// `max_pu² - min_pu²`.
pub fn usable_energy_fraction<T: Scalar>(w: &OperatingWindow<T>) -> T {
    w.max_pu * w.max_pu - w.min_pu * w.min_pu
}
