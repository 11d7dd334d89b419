//! Supercapacitor cycling: closed-form efficiency relations, a protocol
//! simulator, trace analysis and efficiency maps over operating windows.
//!
//! Every model is generic over the scalar type; the `*F64` and `*F32`
//! aliases below cover the usual cases.

// `!(x > y)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analyzer;
pub mod error;
pub mod map;
pub mod model;
pub mod presets;
pub mod regression;
pub mod scalar;
pub mod simulator;
pub mod trace;

pub use error::{Error, Result};
pub use model::{
    charge_duration, efficiency_no_rest, efficiency_with_rest, energy_in, energy_in_with_rest,
    energy_out, energy_out_with_rest, test_current, usable_energy_fraction, CycleSpec,
    DeviceParams, OperatingWindow, Redistribution, RestVoltages,
};
pub use scalar::Scalar;
pub use trace::{Phase, PhaseSpan, Sample, Trace};

pub type DeviceParamsF64 = DeviceParams<f64>;
pub type CycleSpecF64 = CycleSpec<f64>;
pub type RestVoltagesF64 = RestVoltages<f64>;
pub type OperatingWindowF64 = OperatingWindow<f64>;
pub type TraceF64 = Trace<f64>;
pub type AcquisitionConfigF64 = simulator::AcquisitionConfig<f64>;
pub type ProtocolRunF64 = simulator::ProtocolRun<f64>;
pub type AnalysisReportF64 = analyzer::AnalysisReport<f64>;
pub type EfficiencyGridF64 = map::EfficiencyGrid<f64>;
pub type SelfDischargeModelF64 = map::SelfDischargeModel<f64>;
pub type OperatingPointF64 = map::OperatingPoint<f64>;

pub type DeviceParamsF32 = DeviceParams<f32>;
pub type CycleSpecF32 = CycleSpec<f32>;
pub type TraceF32 = Trace<f32>;
pub type EfficiencyGridF32 = map::EfficiencyGrid<f32>;
