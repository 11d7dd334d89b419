//! Constant-current cycling of the equivalent circuit, sampled like the
//! physical test rig.

mod dynamics;
mod protocol;

pub use dynamics::{step_dynamics, Propagator, SimState};
pub use protocol::{quantize_trace, run_protocol, AcquisitionConfig, CycleCharge, ProtocolRun};
