use serde::{Deserialize, Serialize};

use super::fixtures::RestVoltageRow;
use crate::error::{Error, Result};
use crate::model::RestVoltages;
use crate::regression::fit_line;
use crate::scalar::Scalar;

/// Minimum coefficient of determination for the model to be used in
/// closed-form predictions.
pub const MIN_FIT_QUALITY: f64 = 0.95;

/// Rest voltages as straight lines in the window span `ΔV = v_max - v_min`.
/// Slopes are mV per V, intercepts mV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfDischargeModel<T> {
    pub slope_sd: T,
    pub intercept_sd: T,
    pub slope_sc: T,
    pub intercept_sc: T,
    pub r2_sd: T,
    pub r2_sc: T,
    /// The smaller of the two coefficients of determination.
    pub fit_quality: T,
}

impl<T: Scalar> SelfDischargeModel<T> {
    /// Predicted rest voltages in volts for a span `dv` in volts, clamped at zero.
    pub fn predict(&self, dv: T) -> RestVoltages<T> {
        let mv = T::lit(1e-3);
        RestVoltages {
            v_sd: ((self.slope_sd * dv + self.intercept_sd) * mv).max(T::zero()),
            v_sc: ((self.slope_sc * dv + self.intercept_sc) * mv).max(T::zero()),
        }
    }

    /// Refuses models whose fit is too poor to extrapolate from.
    pub fn ensure_usable(&self, required: T) -> Result<()> {
        if self.fit_quality >= required {
            Ok(())
        } else {
            Err(Error::FitQualityTooLow {
                fit_quality: self.fit_quality.as_f64(),
                required: required.as_f64(),
            })
        }
    }
}

/// Ordinary least squares of `v_sd` and `v_sc` against the window span.
pub fn fit_self_discharge<T: Scalar>(rows: &[RestVoltageRow<T>]) -> Result<SelfDischargeModel<T>> {
    if rows.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "self-discharge fit needs at least 3 rows, got {}",
            rows.len()
        )));
    }
    let dv: Vec<T> = rows.iter().map(|r| r.vmax - r.vm).collect();
    let sd: Vec<T> = rows.iter().map(|r| r.v_sd_mv).collect();
    let sc: Vec<T> = rows.iter().map(|r| r.v_sc_mv).collect();
    let f_sd = fit_line(&dv, &sd)?;
    let f_sc = fit_line(&dv, &sc)?;
    for (name, slope) in [("slope_sd", f_sd.slope), ("slope_sc", f_sc.slope)] {
        if slope < T::zero() {
            return Err(Error::invalid(
                name,
                format!("fitted slope {slope} is negative; rest voltages must grow with the span"),
            ));
        }
    }
    Ok(SelfDischargeModel {
        slope_sd: f_sd.slope,
        intercept_sd: f_sd.intercept,
        slope_sc: f_sc.slope,
        intercept_sc: f_sc.intercept,
        r2_sd: f_sd.r_squared,
        r2_sc: f_sc.r_squared,
        fit_quality: f_sd.r_squared.min(f_sc.r_squared),
    })
}
