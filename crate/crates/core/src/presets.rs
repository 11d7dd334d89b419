//! Device presets for the 10, 50 and 100 F cells (2.7 V rated).
//!
//! Series resistances are back-derived: each is the resistance at which the
//! closed-form efficiency over the full window reaches 95% at the cell's test
//! current. They are not datasheet values.
//!
//! The redistribution branch and leakage were calibrated on the 50 F cell so
//! that a full-window cycle with 30 minute rests shows the measured 156 mV of
//! self-discharge. Other sizes scale them with capacitance, keeping the branch
//! time constant at 40 s.

use crate::error::Result;
use crate::map::PaperDevice;
use crate::model::DeviceParams;
use crate::scalar::Scalar;

pub const V_RATED: f64 = 2.7;

/// Branch capacitance as a fraction of the main capacitance.
pub const BRANCH_FRACTION: f64 = 0.09294;

/// `r_branch * c_branch` (s).
pub const BRANCH_TAU: f64 = 40.0;

/// Leakage resistance times capacitance (Ω·F), i.e. 7 kΩ at 50 F.
pub const LEAK_RC: f64 = 350_000.0;

/// Series resistance for a given preset (Ω).
pub fn series_resistance(d: PaperDevice) -> f64 {
    match d {
        PaperDevice::C10 => 0.0306331,
        PaperDevice::C50 => 0.00876339,
        PaperDevice::C100 => 0.00736498,
    }
}

/// Two-branch device with leakage.
pub fn device<T: Scalar>(d: PaperDevice) -> Result<DeviceParams<T>> {
    let c = d.farads();
    let c_b = BRANCH_FRACTION * c;
    DeviceParams::new(T::lit(c), T::lit(series_resistance(d)), T::lit(V_RATED))?
        .with_redistribution(T::lit(c_b), T::lit(BRANCH_TAU / c_b))?
        .with_leak(T::lit(LEAK_RC / c))
}

/// Series-RC device only.
pub fn ideal_device<T: Scalar>(d: PaperDevice) -> Result<DeviceParams<T>> {
    DeviceParams::new(T::lit(d.farads()), T::lit(series_resistance(d)), T::lit(V_RATED))
}

/// Looks a preset up by label (`10F`, `50F`, `100F`, case-insensitive).
pub fn by_name<T: Scalar>(name: &str) -> Option<Result<DeviceParams<T>>> {
    PaperDevice::from_label(name).map(device)
}
