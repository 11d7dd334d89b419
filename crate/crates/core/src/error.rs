use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("window too narrow: v_max - v_min = {window} V must exceed 2*i_c*R = {min_window} V")]
    WindowTooNarrow { window: f64, min_window: f64 },

    #[error("losses exceed delivery: efficiency numerator {numerator} V is not positive")]
    LossesExceedDelivery { numerator: f64 },

    #[error("unbounded current: series resistance is zero, any current reaches the target")]
    UnboundedCurrent,

    #[error("dynamics diverged at t = {t} s (v_main = {v_main} V)")]
    DynamicsDiverged { t: f64, v_main: f64 },

    #[error("{phase} phase of cycle {cycle} did not reach its threshold within {limit_s} s")]
    PhaseTimeout {
        phase: &'static str,
        cycle: usize,
        limit_s: f64,
    },

    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error("no cycles found: trace has no active current samples")]
    NoCyclesFound,

    #[error("malformed protocol at sample {index}: {reason}")]
    MalformedProtocol { index: usize, reason: String },

    #[error("no active-to-rest voltage jump found")]
    NoJumpFound,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("rank-deficient fit: regressor has no spread")]
    RankDeficientFit,

    #[error("self-discharge fit quality {fit_quality:.4} below required {required:.2}; use simulated mode instead")]
    FitQualityTooLow { fit_quality: f64, required: f64 },

    #[error("infeasible energy requirement: fraction {0} cannot be met")]
    InfeasibleEnergyRequirement(f64),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
