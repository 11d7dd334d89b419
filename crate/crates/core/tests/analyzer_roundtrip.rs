//! Simulate, analyze, and compare with the parameters that generated the trace.

use supercap::analyzer::{analyze, segment, AnalyzerConfig, WindowRule};
use supercap::map::PaperDevice;
use supercap::simulator::{run_protocol, AcquisitionConfig, ProtocolRun};
use supercap::{efficiency_no_rest, presets, CycleSpec, DeviceParams, Phase, Trace};

fn simulate(p: &DeviceParams<f64>, s: &CycleSpec<f64>, acq: &AcquisitionConfig<f64>) -> ProtocolRun<f64> {
    run_protocol(p, s, acq).unwrap()
}

#[test]
fn recovers_parameters_over_grid() {
    for c in [10.0, 50.0, 100.0] {
        for r in [0.01, 0.05, 0.1] {
            let i = c / 25.0;
            let p = DeviceParams::new(c, r, 2.7).unwrap();
            // short rests expose the interruption jumps
            let s = CycleSpec::new(i, 0.5, 2.5).with_rests(5.0, 5.0).with_max_cycles(6);
            let run = simulate(&p, &s, &AcquisitionConfig::default());
            let rep = analyze(&run.trace, &AnalyzerConfig::default()).unwrap();
            let r_hat = rep.resistance.unwrap().value;
            let c_hat = rep.capacitance.unwrap().value;
            let eta = efficiency_no_rest(&p, &s).unwrap();
            assert!(((r_hat - r) / r).abs() < 0.02, "C={c} R={r}: R^={r_hat}");
            assert!(((c_hat - c) / c).abs() < 0.01, "C={c} R={r}: C^={c_hat}");
            assert!((rep.steady.mean.eta - eta).abs() < 0.002, "C={c} R={r}: {} vs {eta}", rep.steady.mean.eta);
        }
    }
}

#[test]
fn quantization_degrades_within_bounds() {
    let p = DeviceParams::new(10.0, 0.0922, 2.7).unwrap();
    let s = CycleSpec::new(0.4, 0.5, 2.5).with_rests(5.0, 5.0).with_max_cycles(6);
    let acq = AcquisitionConfig::default();
    let clean = analyze(&simulate(&p, &s, &acq).trace, &AnalyzerConfig::default()).unwrap();
    let noisy = analyze(&simulate(&p, &s, &acq.quantized(true)).trace, &AnalyzerConfig::default()).unwrap();
    let (vq, iq, i) = (acq.v_quantum, acq.i_quantum, s.i_c);

    // a jump is a difference of two rounded voltages over a rounded current
    let r = clean.resistance.unwrap().value;
    let r_bound = vq / (i - iq / 2.0) + r * (iq / 2.0) / (i - iq / 2.0);
    let dr = (noisy.resistance.unwrap().value - r).abs();
    assert!(dr <= r_bound, "ΔR {dr} > {r_bound}");

    // the fitted slope moves by at most one quantum over the fitted span
    let c = clean.capacitance.unwrap().value;
    let fitted_span = 0.8 * (s.v_max - s.v_min - 2.0 * i * p.r_series);
    let c_bound = c * (vq / fitted_span + iq / (2.0 * i));
    let dc = (noisy.capacitance.unwrap().value - c).abs();
    assert!(dc <= c_bound, "ΔC {dc} > {c_bound}");

    // energies: half a voltage quantum on the mean voltage, half a current quantum on i
    let v_mean = 0.5 * (s.v_min + s.v_max);
    let eta_bound = 2.0 * (vq / 2.0 / v_mean + iq / 2.0 / i);
    let de = (noisy.steady.mean.eta - clean.steady.mean.eta).abs();
    assert!(de <= eta_bound, "Δη {de} > {eta_bound}");
}

#[test]
fn twenty_cycle_run_averages_cycles_17_to_20() {
    let p = DeviceParams::new(10.0, 0.0922, 2.7).unwrap();
    let s = CycleSpec::new(0.4, 0.5, 2.5).with_max_cycles(20);
    let rep = analyze(&simulate(&p, &s, &AcquisitionConfig::default()).trace, &AnalyzerConfig::default()).unwrap();
    assert_eq!(rep.steady.window, (17, 20));
    assert_eq!(rep.steady.window_rule, WindowRule::Cycles17To20);
    assert_eq!(rep.steady.steady_from_cycle, Some(1));
    assert!((rep.steady.mean.eta - 0.952).abs() < 0.002, "{}", rep.steady.mean.eta);
}

#[test]
fn sampling_rate_stability() {
    let p = DeviceParams::new(10.0, 0.0922, 2.7).unwrap();
    let s = CycleSpec::new(0.4, 0.5, 2.5).with_max_cycles(6);
    let eta = |dt: f64| {
        let run = simulate(&p, &s, &AcquisitionConfig::default().with_sample_period(dt));
        analyze(&run.trace, &AnalyzerConfig::default()).unwrap().steady.mean.eta
    };
    let d = (eta(0.1) - eta(0.05)).abs();
    assert!(d < 5e-4, "Δη {d}");
}

#[test]
fn energy_balance_and_charge_ratio_on_two_branch_traces() {
    let p = presets::device::<f64>(PaperDevice::C50).unwrap();
    let s = CycleSpec::new(3.95, 0.0, 2.7).with_rests(1800.0, 1800.0).with_max_cycles(8);
    let run = simulate(&p, &s, &AcquisitionConfig::default());
    let rep = analyze(&run.trace, &AnalyzerConfig::default()).unwrap();
    let from = rep.steady.steady_from_cycle.expect("steady");
    for m in &rep.steady.per_cycle {
        let lost = m.e_in - m.e_out;
        assert!((m.total_loss() - lost).abs() <= 1e-6 * lost, "cycle {}", m.cycle_index);
        assert!(m.loss_rest > 0.0 && m.loss_charge > 0.0 && m.loss_discharge > 0.0);
        assert!(m.v_sd > 0.0 && m.v_sc > 0.0);
        if m.cycle_index >= from {
            let ratio = m.q_out / m.q_in;
            assert!((0.99..=1.01).contains(&ratio), "cycle {}: {ratio}", m.cycle_index);
        }
    }
    // redistribution makes the ramps look like a larger capacitor
    assert!(rep.capacitance.unwrap().value > p.c_main);
}

#[test]
fn analyzer_and_simulator_agree_on_steady_state() {
    for d in PaperDevice::ALL {
        let p = presets::device::<f64>(d).unwrap();
        let s = CycleSpec::new(d.test_current(), 0.0, 2.7).with_max_cycles(12);
        let run = simulate(&p, &s, &AcquisitionConfig::default());
        let rep = analyze(&run.trace, &AnalyzerConfig::default()).unwrap();
        let (a, b) = (rep.steady.steady_from_cycle.unwrap(), run.steady_from_cycle.unwrap());
        assert!(a.abs_diff(b) <= 1, "{d:?}: analyzer {a}, simulator {b}");
    }
}

#[test]
fn segments_match_ground_truth() {
    let p = presets::device::<f64>(PaperDevice::C10).unwrap();
    let s = CycleSpec::new(1.13, 0.5, 2.5).with_rests(60.0, 30.0).with_max_cycles(4);
    let run = simulate(&p, &s, &AcquisitionConfig::default());
    let dt = run.trace.sample_period();
    let segs = segment(&run.trace, 0.05, 1.0).unwrap();
    assert_eq!(segs.len(), run.phases.len());
    for (seg, truth) in segs.iter().zip(&run.phases) {
        assert_eq!(seg.kind, truth.phase);
        assert!((seg.t_end - truth.t_end).abs() <= dt + 1e-9, "{seg:?} vs {truth:?}");
        assert!((seg.t_start - truth.t_start).abs() <= dt + 1e-9, "{seg:?} vs {truth:?}");
    }
    assert_eq!(segs.iter().filter(|g| g.kind == Phase::RestHigh).count(), 4);
}

#[test]
fn lossless_trace_has_no_jump() {
    let p = DeviceParams::new(10.0, 0.0, 2.7).unwrap();
    let s = CycleSpec::new(0.4, 0.5, 2.5).with_rests(5.0, 5.0).with_max_cycles(3);
    let rep = analyze(&simulate(&p, &s, &AcquisitionConfig::default().quantized(true)).trace, &AnalyzerConfig::default()).unwrap();
    let r = rep.resistance.unwrap().value;
    assert!(r <= 0.093e-3 / 0.4, "R {r}");
}

#[test]
fn csv_round_trip_preserves_analysis() {
    let p = DeviceParams::new(10.0, 0.0922, 2.7).unwrap();
    let s = CycleSpec::new(0.4, 0.5, 2.5).with_max_cycles(3);
    let run = simulate(&p, &s, &AcquisitionConfig::default());
    let text = run.trace.to_csv_string();
    let back = Trace::<f64>::read_csv(text.as_bytes()).unwrap();
    let a = analyze(&run.trace, &AnalyzerConfig::default()).unwrap();
    let b = analyze(&back, &AnalyzerConfig::default()).unwrap();
    assert!((a.steady.mean.eta - b.steady.mean.eta).abs() < 1e-7);
    assert_eq!(a.segments.len(), b.segments.len());
}
