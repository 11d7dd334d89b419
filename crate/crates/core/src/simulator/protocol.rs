use serde::{Deserialize, Serialize};

use super::dynamics::{Propagator, SimState};
use crate::error::{Error, Result};
use crate::model::{charge_duration, CycleSpec, DeviceParams};
use crate::scalar::Scalar;
use crate::trace::{Phase, PhaseSpan, Sample, Trace};

/// Data acquisition settings of the simulated test rig.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct AcquisitionConfig<T> {
    #[serde(default = "default_period")]
    pub sample_period: T,
    #[serde(default = "default_v_quantum")]
    pub v_quantum: T,
    #[serde(default = "default_i_quantum")]
    pub i_quantum: T,
    #[serde(default)]
    pub quantize: bool,
}

fn default_period<T: Scalar>() -> T {
    T::lit(0.1)
}

fn default_v_quantum<T: Scalar>() -> T {
    T::lit(0.093e-3)
}

fn default_i_quantum<T: Scalar>() -> T {
    T::lit(0.93e-3)
}

impl<T: Scalar> Default for AcquisitionConfig<T> {
    fn default() -> Self {
        Self {
            sample_period: default_period(),
            v_quantum: default_v_quantum(),
            i_quantum: default_i_quantum(),
            quantize: false,
        }
    }
}

impl<T: Scalar> AcquisitionConfig<T> {
    pub fn with_sample_period(mut self, dt: T) -> Self {
        self.sample_period = dt;
        self
    }

    pub fn quantized(mut self, on: bool) -> Self {
        self.quantize = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("acquisition.sample_period", self.sample_period),
            ("acquisition.v_quantum", self.v_quantum),
            ("acquisition.i_quantum", self.i_quantum),
        ] {
            if !(v.is_finite() && v > T::zero()) {
                return Err(Error::invalid(field, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Charge moved in one simulated cycle, integrated exactly over internal steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleCharge<T> {
    pub cycle: usize,
    pub q_in: T,
    pub q_out: T,
}

impl<T: Scalar> CycleCharge<T> {
    pub fn imbalance(&self) -> T {
        ((self.q_in - self.q_out) / self.q_in).abs()
    }
}

/// Everything a protocol run produces: the sampled trace plus ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolRun<T> {
    pub trace: Trace<T>,
    pub phases: Vec<PhaseSpan<T>>,
    pub cycles: Vec<CycleCharge<T>>,
    /// First cycle that, together with its successor, meets the charge
    /// balance tolerance.
    pub steady_from_cycle: Option<usize>,
    /// Integration step actually used (s).
    pub internal_step: T,
}

/// Internal steps per sample: the integration step is at most one fiftieth of
/// the redistribution time constant.
fn substeps<T: Scalar>(p: &DeviceParams<T>, sample_period: T) -> usize {
    match p.redistribution_tau() {
        Some(tau) => {
            let ratio = (sample_period / (tau / T::lit(50.0))).ceil();
            ratio.to_usize().unwrap_or(1).max(1)
        }
        None => 1,
    }
}

struct Recorder<'a, T> {
    p: &'a DeviceParams<T>,
    prop: Propagator<T>,
    state: SimState<T>,
    per_sample: usize,
    step: usize,
    sample_period: T,
    samples: Vec<Sample<T>>,
    lo: T,
    hi: T,
}

impl<T: Scalar> Recorder<'_, T> {
    fn now(&self) -> T {
        self.sample_period * T::from_usize_lossy(self.step) / T::from_usize_lossy(self.per_sample)
    }

    /// One internal step with `current` held; emits a sample on the grid.
    fn tick(&mut self, current: T) -> Result<()> {
        self.prop.advance(&mut self.state, current)?;
        self.step += 1;
        self.state.t = self.now();
        let v = self.state.v_main;
        if !(v >= self.lo && v <= self.hi) {
            return Err(Error::DynamicsDiverged {
                t: self.state.t.as_f64(),
                v_main: v.as_f64(),
            });
        }
        if self.step.is_multiple_of(self.per_sample) {
            self.samples.push(Sample {
                t: self.state.t,
                v: self.state.terminal_voltage(self.p, current),
                i: current,
            });
        }
        Ok(())
    }
}

/// Simulates `s.max_cycles` constant-current cycles.
///
/// The device starts at rest with both capacitances at `v_min + i_c R`, the
/// open-circuit voltage left by a discharge that ended at terminal `v_min`.
/// Each sample records the terminal voltage and the current of the internal
/// step that ended at the sample instant. Charge stops at the first internal
/// step whose terminal voltage reaches `v_max`; discharge at `v_min`.
pub fn run_protocol<T: Scalar>(
    p: &DeviceParams<T>,
    s: &CycleSpec<T>,
    acq: &AcquisitionConfig<T>,
) -> Result<ProtocolRun<T>> {
    p.validate()?;
    s.validate_for(p)?;
    acq.validate()?;
    let ideal_duration = charge_duration(p, s)?;

    let per_sample = substeps(p, acq.sample_period);
    let h = acq.sample_period / T::from_usize_lossy(per_sample);
    let prop = Propagator::new(p, h)?;
    let slack = T::threshold_slack(p.v_rated);

    let c_total = p.c_main + p.redistribution.map_or(T::zero(), |b| b.c_branch);
    let active_limit = T::lit(10.0) * c_total * (s.v_max - s.v_min) / s.i_c
        + T::lit(10.0) * acq.sample_period;
    let max_active_steps = (active_limit / h).ceil().to_usize().unwrap_or(usize::MAX);
    let rest_steps = |d: T| (d / h).round().to_usize().unwrap_or(0);
    let rest_high = rest_steps(s.rest_after_charge);
    let rest_low = rest_steps(s.rest_after_discharge);

    let v0 = s.v_min + s.i_c * p.r_series;
    let mut rec = Recorder {
        p,
        prop,
        state: SimState::at_rest(p, v0),
        per_sample,
        step: 0,
        sample_period: acq.sample_period,
        samples: Vec::new(),
        lo: T::lit(-0.1) * p.v_rated,
        hi: T::lit(1.2) * p.v_rated,
    };
    rec.samples.push(Sample {
        t: T::zero(),
        v: v0,
        i: T::zero(),
    });

    let mut phases = Vec::new();
    let mut cycles = Vec::new();
    for cycle in 1..=s.max_cycles {
        rec.state.cycle_index = cycle;
        let mut q_in = T::zero();
        let mut q_out = T::zero();
        for phase in [Phase::Charge, Phase::RestHigh, Phase::Discharge, Phase::RestLow] {
            rec.state.phase = phase;
            let t_start = rec.now();
            match phase {
                Phase::Charge | Phase::Discharge => {
                    let current = if phase == Phase::Charge { s.i_c } else { -s.i_c };
                    let mut n = 0usize;
                    loop {
                        rec.tick(current)?;
                        n += 1;
                        let v = rec.state.terminal_voltage(p, current);
                        let done = if phase == Phase::Charge {
                            v >= s.v_max - slack
                        } else {
                            v <= s.v_min + slack
                        };
                        if done {
                            break;
                        }
                        if n >= max_active_steps {
                            return Err(Error::PhaseTimeout {
                                phase: phase.label(),
                                cycle,
                                limit_s: active_limit.as_f64(),
                            });
                        }
                    }
                    let q = s.i_c * h * T::from_usize_lossy(n);
                    if phase == Phase::Charge {
                        q_in = q;
                    } else {
                        q_out = q;
                    }
                }
                Phase::RestHigh | Phase::RestLow => {
                    let n = if phase == Phase::RestHigh { rest_high } else { rest_low };
                    if n == 0 {
                        continue;
                    }
                    for _ in 0..n {
                        rec.tick(T::zero())?;
                    }
                }
            }
            phases.push(PhaseSpan {
                cycle,
                phase,
                t_start,
                t_end: rec.now(),
            });
        }
        cycles.push(CycleCharge { cycle, q_in, q_out });
    }

    // Pad to the next sample instant so the trace ends on the grid.
    while !rec.step.is_multiple_of(per_sample) {
        rec.tick(T::zero())?;
    }

    let steady_from_cycle = cycles
        .windows(2)
        .find(|w| w.iter().all(|c| c.imbalance() < s.steady_tolerance))
        .map(|w| w[0].cycle);

    let mut trace = Trace::new(rec.samples, acq.sample_period)?
        .with_meta("source", "simulator")
        .with_meta("device.c_main_F", p.c_main)
        .with_meta("device.r_series_ohm", p.r_series)
        .with_meta("device.v_rated_V", p.v_rated)
        .with_meta("spec.i_c_A", s.i_c)
        .with_meta("spec.v_min_V", s.v_min)
        .with_meta("spec.v_max_V", s.v_max)
        .with_meta("spec.rest_after_charge_s", s.rest_after_charge)
        .with_meta("spec.rest_after_discharge_s", s.rest_after_discharge)
        .with_meta("spec.max_cycles", s.max_cycles)
        .with_meta("closed_form.charge_duration_s", ideal_duration)
        .with_meta(
            "sim.steady_from_cycle",
            steady_from_cycle.map_or("none".to_string(), |c| c.to_string()),
        );
    if let Some(b) = p.redistribution {
        trace = trace
            .with_meta("device.c_branch_F", b.c_branch)
            .with_meta("device.r_branch_ohm", b.r_branch);
    }
    if let Some(r) = p.r_leak {
        trace = trace.with_meta("device.r_leak_ohm", r);
    }
    for span in &phases {
        trace.meta.insert(
            format!("truth.cycle{:03}.{}", span.cycle, span.phase.label()),
            format!("{},{}", span.t_start, span.t_end),
        );
    }
    if acq.quantize {
        trace = quantize_trace(&trace, acq);
        trace.meta.insert("acquisition.quantized".into(), "true".into());
    }

    Ok(ProtocolRun {
        trace,
        phases,
        cycles,
        steady_from_cycle,
        internal_step: h,
    })
}

fn round_to<T: Scalar>(x: T, q: T) -> T {
    (x / q).round() * q
}

/// Rounds every voltage and current sample to the nearest acquisition quantum.
pub fn quantize_trace<T: Scalar>(trace: &Trace<T>, acq: &AcquisitionConfig<T>) -> Trace<T> {
    trace.map_samples(|s| Sample {
        t: s.t,
        v: round_to(s.v, acq.v_quantum),
        i: round_to(s.i, acq.i_quantum),
    })
}
