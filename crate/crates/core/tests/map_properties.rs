//! Efficiency surfaces: measured tables, the fitted rest model, grids and the
//! window optimizer.

use supercap::map::fixtures::{table2, table3, table4, WindowEfficiency};
use supercap::map::{
    build_grid, fit_self_discharge, grid_svg, optimize_window, GridMethod, Objective, PaperDevice,
    RestSetting, DEFAULT_LEVELS,
};
use supercap::{presets, DeviceParams};

fn column(rows: &[WindowEfficiency<f64>], d: PaperDevice, vmax: f64) -> Vec<(f64, f64)> {
    rows.iter()
        .filter(|r| r.vmax_pu == vmax)
        .map(|r| (r.vm_pu, r.for_device(d)))
        .collect()
}

#[test]
fn measured_efficiency_rises_with_minimum_voltage() {
    let t2 = table2::<f64>();
    for d in PaperDevice::ALL {
        for vmax in [0.5, 0.7, 0.9, 1.0] {
            let col = column(&t2, d, vmax);
            for w in col.windows(2) {
                assert!(w[0].0 < w[1].0 && w[0].1 <= w[1].1, "{d:?} vM={vmax}: {col:?}");
            }
        }
    }
}

#[test]
fn measured_efficiency_peaks_at_full_voltage() {
    let t2 = table2::<f64>();
    for d in PaperDevice::ALL {
        for vm in [0.0, 0.25, 0.5, 0.7, 0.9] {
            let row: Vec<_> = t2.iter().filter(|r| r.vm_pu == vm).collect();
            let at_full = row.iter().find(|r| r.vmax_pu == 1.0).unwrap().for_device(d);
            assert!(row.iter().all(|r| r.for_device(d) <= at_full), "{d:?} vm={vm}");
        }
    }
}

#[test]
fn rests_lower_measured_efficiency() {
    for (a, b) in table2::<f64>().iter().zip(table4::<f64>()) {
        assert_eq!((a.vm_pu, a.vmax_pu), (b.vm_pu, b.vmax_pu));
        for d in PaperDevice::ALL {
            assert!(b.for_device(d) < a.for_device(d), "{d:?} ({}, {})", a.vm_pu, a.vmax_pu);
        }
    }
}

#[test]
fn rest_fit_matches_reference_regression() {
    let m = fit_self_discharge(&table3::<f64>()).unwrap();
    let close = |a: f64, b: f64, tol: f64| (a - b).abs() <= tol;
    assert!(close(m.slope_sd, 54.4212, 1e-4), "{}", m.slope_sd);
    assert!(close(m.intercept_sd, 13.1476, 1e-4), "{}", m.intercept_sd);
    assert!(close(m.r2_sd, 0.993766, 1e-6), "{}", m.r2_sd);
    assert!(close(m.slope_sc, 45.9445, 1e-4), "{}", m.slope_sc);
    assert!(close(m.intercept_sc, 6.3821, 1e-4), "{}", m.intercept_sc);
    assert!(close(m.r2_sc, 0.977772, 1e-6), "{}", m.r2_sc);
    assert_eq!(m.fit_quality, m.r2_sc);
}

#[test]
fn closed_form_grid_is_monotone() {
    let p = presets::ideal_device::<f64>(PaperDevice::C50).unwrap();
    let g = build_grid(&p, 3.95, &DEFAULT_LEVELS, None, GridMethod::ClosedForm).unwrap();
    for r in 0..g.vm_levels.len() {
        for c in 0..g.vmax_levels.len() {
            let Some(e) = g.eta[r][c] else { continue };
            if let Some(Some(up)) = g.eta[r].get(c + 1) {
                assert!(*up > e);
            }
            if let Some(Some(up)) = g.eta.get(r + 1).map(|row| row[c]) {
                assert!(up > e);
            }
        }
    }
}

#[test]
fn simulated_grid_agrees_with_closed_form() {
    let p = presets::ideal_device::<f64>(PaperDevice::C10).unwrap();
    let cf = build_grid(&p, 1.13, &DEFAULT_LEVELS, None, GridMethod::ClosedForm).unwrap();
    let sim = build_grid(&p, 1.13, &DEFAULT_LEVELS, None, GridMethod::Simulated).unwrap();
    assert!(sim.notes.is_empty(), "{:?}", sim.notes);
    for r in 0..cf.vm_levels.len() {
        for c in 0..cf.vmax_levels.len() {
            match (cf.eta[r][c], sim.eta[r][c]) {
                (Some(a), Some(b)) => assert!((a - b).abs() < 0.002, "cell ({r}, {c}): {a} vs {b}"),
                (None, None) => {}
                other => panic!("cell ({r}, {c}) defined in one grid only: {other:?}"),
            }
        }
    }
}

#[test]
fn optimizer_with_rest_beats_naive_window() {
    let model = fit_self_discharge(&table3::<f64>()).unwrap();
    let p = presets::ideal_device::<f64>(PaperDevice::C100).unwrap();
    let obj = Objective::ClosedForm { device: &p, i_c: 4.7, rest: Some(&model) };
    let op = optimize_window(&obj, 0.5).unwrap();
    let naive = obj.evaluate(0.5f64.sqrt(), 1.0).unwrap();
    assert!(op.eta >= naive, "{} < {naive}", op.eta);
    assert!(op.energy_fraction >= 0.5 - 1e-12);
    let back = obj.evaluate(op.window.min_pu, op.window.max_pu).unwrap();
    assert_eq!(back, op.eta);
}

#[test]
fn optimizer_dominates_every_feasible_cell() {
    let model = fit_self_discharge(&table3::<f64>()).unwrap();
    let p = presets::ideal_device::<f64>(PaperDevice::C50).unwrap();
    let rest = RestSetting { duration: 1800.0, model };
    let g = build_grid(&p, 3.95, &DEFAULT_LEVELS, Some(&rest), GridMethod::ClosedForm).unwrap();
    let obj = Objective::ClosedForm { device: &p, i_c: 3.95, rest: Some(&model) };
    for f in [0.2, 0.5, 0.75, 0.9] {
        let op = optimize_window(&obj, f).unwrap();
        for (vm, vmax, eta) in g.defined_cells() {
            if vmax * vmax - vm * vm >= f {
                assert!(op.eta >= eta, "f={f}: {op:?} vs ({vm}, {vmax}) {eta}");
            }
        }
    }
}

#[test]
fn fixture_map_renders_measured_values() {
    let p: DeviceParams<f64> = presets::device(PaperDevice::C100).unwrap();
    let g = build_grid(&p, 4.7, &[], None, GridMethod::PaperFixture).unwrap();
    let svg = grid_svg(&g).unwrap();
    assert!(svg.contains("94.1"));
    assert_eq!(svg, grid_svg(&g).unwrap());
}

#[test]
fn single_precision_grid() {
    let p = DeviceParams::<f32>::new(10.0, 0.0306, 2.7).unwrap();
    let g = build_grid(&p, 1.13f32, &[0.0f32, 0.5, 1.0], None, GridMethod::ClosedForm).unwrap();
    let e = g.get(0.0, 1.0).unwrap();
    assert!((e - 0.95).abs() < 1e-3, "{e}");
}
