use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use supercap::analyzer::{analyze as run_analysis, AnalyzerConfig};
use supercap::map::fixtures::{self, rest_rows_from_csv};
use supercap::map::{
    build_grid, fit_self_discharge, optimize_window, render_map, EfficiencyGrid, GridMethod,
    Objective, RestSetting, SelfDischargeModel, DEFAULT_LEVELS, REFERENCE_REST_S,
};
use supercap::simulator::{run_protocol, AcquisitionConfig};
use supercap::trace::{write_sidecar, Sig9};
use supercap::{test_current, CycleSpec, DeviceParams, OperatingWindow, Trace};

use crate::config::{self, RunConfig};
use crate::error::{CliError, CliResult};
use crate::{
    AnalyzeArgs, DeviceArgs, FitArgs, FixtureArg, FixturesArgs, IecArgs, MapArgs, MethodArg,
    OptimizeArgs, SimulateArgs,
};

/// Device used by `map` and `optimize` when none is given.
const DEFAULT_MAP_DEVICE: &str = "50F";

fn write_output(out: Option<&Path>, content: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, content).map_err(|e| CliError::io(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

fn resolve_device(args: &DeviceArgs, cfg: &RunConfig, fallback: Option<&str>) -> CliResult<DeviceParams<f64>> {
    let p = match (&args.device, &cfg.device, fallback) {
        (Some(name), _, _) => config::device_from_arg(name)?,
        (None, Some(d), _) => config::resolve_device(d)?,
        (None, None, Some(name)) => config::device_from_arg(name)?,
        (None, None, None) => return Err(CliError::config("device: required (--device or config `device`)")),
    };
    Ok(if args.ideal || cfg.ideal == Some(true) { p.ideal() } else { p })
}

fn default_current(p: &DeviceParams<f64>, given: Option<f64>) -> CliResult<f64> {
    given
        .or_else(|| config::paper_device(p).map(|d| d.test_current()))
        .ok_or_else(|| CliError::config("current: required for devices without a preset test current"))
}

fn method_from(flag: Option<MethodArg>, cfg: Option<&str>) -> CliResult<Option<MethodArg>> {
    match (flag, cfg) {
        (Some(m), _) => Ok(Some(m)),
        (None, Some(s)) => MethodArg::from_str(s, true)
            .map(Some)
            .map_err(|_| CliError::config(format!("map.method: unknown method `{s}`"))),
        (None, None) => Ok(None),
    }
}

fn grid_method(m: MethodArg) -> GridMethod {
    match m {
        MethodArg::Closedform => GridMethod::ClosedForm,
        MethodArg::Simulated => GridMethod::Simulated,
        MethodArg::Fixture => GridMethod::PaperFixture,
    }
}

fn levels_from(flag: Option<&str>, cfg: Option<&Vec<f64>>) -> CliResult<Vec<f64>> {
    match (flag, cfg) {
        (Some(s), _) => config::parse_levels(s),
        (None, Some(v)) => Ok(v.clone()),
        (None, None) => Ok(DEFAULT_LEVELS.to_vec()),
    }
}

fn rest_model(path: Option<&Path>) -> CliResult<SelfDischargeModel<f64>> {
    match path {
        Some(p) => config::load_rest_model(p),
        None => Ok(fit_self_discharge(&fixtures::table3::<f64>())?),
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// `run.csv` → `run.cycles.csv`.
pub fn sidecar_path(trace: &Path) -> PathBuf {
    let stem = trace.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    trace.with_file_name(format!("{stem}.cycles.csv"))
}

pub fn simulate(a: &SimulateArgs) -> CliResult<()> {
    let cfg = config::load(a.config.as_deref())?;
    let p = resolve_device(&a.device, &cfg, None)?;
    let sp = &cfg.spec;
    let current = default_current(&p, a.current.or(sp.current))?;
    let v_min = a.vmin.or(sp.vmin).unwrap_or(0.0);
    let v_max = a.vmax.or(sp.vmax).unwrap_or(p.v_rated);
    let rest = a.rest.or(sp.rest).unwrap_or(0.0);
    let rest_high = a.rest_high.or(sp.rest_high).unwrap_or(rest);
    let rest_low = a.rest_low.or(sp.rest_low).unwrap_or(rest);
    let mut spec = CycleSpec::new(current, v_min, v_max)
        .with_rests(rest_high, rest_low)
        .with_max_cycles(a.cycles.or(sp.cycles).unwrap_or(20));
    if let Some(tol) = a.steady_tolerance.or(sp.steady_tolerance) {
        spec = spec.with_steady_tolerance(tol);
    }

    let ac = &cfg.acquisition;
    let mut acq = AcquisitionConfig::<f64>::default().quantized(a.quantize || ac.quantize == Some(true));
    if let Some(dt) = a.sample_period.or(ac.sample_period) {
        acq = acq.with_sample_period(dt);
    }
    if let Some(q) = ac.v_quantum {
        acq.v_quantum = q;
    }
    if let Some(q) = ac.i_quantum {
        acq.i_quantum = q;
    }
    spec.validate_for(&p)?;
    acq.validate()?;

    let out = a
        .out
        .clone()
        .or_else(|| cfg.paths.out.clone())
        .ok_or_else(|| CliError::config("out: required (--out or config `paths.out`)"))?;
    let run = run_protocol(&p, &spec, &acq)?;

    let file = File::create(&out).map_err(|e| CliError::io(&out, e))?;
    run.trace
        .write_csv(BufWriter::new(file))
        .map_err(|e| CliError::in_file(&out, e))?;
    let side = sidecar_path(&out);
    let file = File::create(&side).map_err(|e| CliError::io(&side, e))?;
    write_sidecar(&run.phases, BufWriter::new(file)).map_err(|e| CliError::in_file(&side, e))?;

    let steady = run
        .steady_from_cycle
        .map_or_else(|| "not reached".to_string(), |k| format!("from cycle {k}"));
    println!(
        "wrote {} samples to {} and {} phases to {}; steady {steady}",
        run.trace.len(),
        out.display(),
        run.phases.len(),
        side.display()
    );
    Ok(())
}

pub fn analyze(a: &AnalyzeArgs) -> CliResult<()> {
    let cfg = config::load(a.config.as_deref())?;
    let path = a
        .trace
        .clone()
        .or_else(|| cfg.paths.trace.clone())
        .ok_or_else(|| CliError::config("trace: required (argument or config `paths.trace`)"))?;
    let file = File::open(&path).map_err(|e| CliError::io(&path, e))?;
    let trace = Trace::<f64>::read_csv(BufReader::new(file)).map_err(|e| CliError::in_file(&path, e))?;

    let an = &cfg.analyzer;
    let mut ac = AnalyzerConfig::<f64>::default();
    if let Some(x) = a.threshold.or(an.threshold) {
        ac.i_threshold_frac = x;
    }
    if let Some(x) = a.min_segment.or(an.min_segment) {
        ac.min_segment = x;
    }
    if let Some(x) = a.steady_tolerance.or(an.steady_tolerance) {
        ac.steady_tolerance = x;
    }
    if !(ac.steady_tolerance > 0.0 && ac.steady_tolerance < 1.0) {
        return Err(CliError::config("analyzer.steady_tolerance: must lie in (0, 1)"));
    }
    if !(ac.min_segment >= 0.0) {
        return Err(CliError::config("analyzer.min_segment: must be non-negative"));
    }
    let report = run_analysis(&trace, &ac)?;
    write_output(a.out.as_deref().or(cfg.paths.out.as_deref()), &report.to_json())
}

struct GridRequest {
    device: DeviceParams<f64>,
    current: f64,
    levels: Vec<f64>,
    method: GridMethod,
    rest: Option<RestSetting<f64>>,
}

#[allow(clippy::too_many_arguments)]
fn grid_request(
    cfg: &RunConfig,
    device: &DeviceArgs,
    method: Option<MethodArg>,
    fixture: Option<FixtureArg>,
    current: Option<f64>,
    levels: Option<&str>,
    rest: Option<f64>,
    rest_model_path: Option<&Path>,
) -> CliResult<GridRequest> {
    let m = &cfg.map;
    let fixture = match (fixture, m.fixture.as_deref()) {
        (Some(f), _) => Some(f),
        (None, Some(s)) => Some(
            FixtureArg::from_str(s, true)
                .map_err(|_| CliError::config(format!("map.fixture: unknown table `{s}`")))?,
        ),
        (None, None) => None,
    };
    let mut method = method_from(method, m.method.as_deref())?;
    if fixture.is_some() {
        if method.is_some_and(|x| x != MethodArg::Fixture) {
            return Err(CliError::config("method: --fixture requires the fixture method"));
        }
        method = Some(MethodArg::Fixture);
    }
    let method = grid_method(method.unwrap_or(MethodArg::Closedform));
    let device = resolve_device(device, cfg, Some(DEFAULT_MAP_DEVICE))?;
    let current = default_current(&device, current.or(m.current))?;
    let levels = levels_from(levels, m.levels.as_ref())?;

    let rest_s = match fixture {
        Some(FixtureArg::Table4) => Some(REFERENCE_REST_S),
        Some(FixtureArg::Table2) => None,
        None => rest.or(m.rest).filter(|&r| r > 0.0),
    };
    let rest = match rest_s {
        Some(duration) => Some(RestSetting {
            duration,
            model: rest_model(rest_model_path.or(m.rest_model.as_deref()))?,
        }),
        None => None,
    };
    Ok(GridRequest {
        device,
        current,
        levels,
        method,
        rest,
    })
}

fn build(req: &GridRequest) -> CliResult<EfficiencyGrid<f64>> {
    let grid = build_grid(&req.device, req.current, &req.levels, req.rest.as_ref(), req.method)?;
    for note in &grid.notes {
        eprintln!("note: {note}");
    }
    Ok(grid)
}

pub fn map(a: &MapArgs) -> CliResult<()> {
    let cfg = config::load(a.config.as_deref())?;
    let req = grid_request(
        &cfg,
        &a.device,
        a.method,
        a.fixture,
        a.current,
        a.levels.as_deref(),
        a.rest,
        a.rest_model.as_deref(),
    )?;
    let grid = build(&req)?;
    let dir = a
        .out_dir
        .clone()
        .or_else(|| cfg.paths.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let name = a.name.clone().or_else(|| cfg.paths.name.clone()).unwrap_or_else(|| "map".into());
    let (csv, svg) = render_map(&grid, &dir, &name).map_err(|e| match e {
        supercap::Error::Io(source) => CliError::io(&dir, source),
        e => CliError::Core(e),
    })?;
    println!("wrote {} and {}", csv.display(), svg.display());
    Ok(())
}

pub fn optimize(a: &OptimizeArgs) -> CliResult<()> {
    let cfg = config::load(a.config.as_deref())?;
    let f = a
        .min_energy
        .or(cfg.map.min_energy)
        .ok_or_else(|| CliError::config("min_energy: required (--min-energy or config `map.min_energy`)"))?;
    let req = grid_request(
        &cfg,
        &a.device,
        a.method,
        None,
        a.current,
        a.levels.as_deref(),
        a.rest,
        a.rest_model.as_deref(),
    )?;
    let op = match req.method {
        GridMethod::ClosedForm => {
            if let Some(rest) = &req.rest {
                rest.model.ensure_usable(supercap::map::MIN_FIT_QUALITY)?;
            }
            let obj = Objective::ClosedForm {
                device: &req.device,
                i_c: req.current,
                rest: req.rest.as_ref().map(|r| &r.model),
            };
            optimize_window(&obj, f)?
        }
        _ => {
            let grid = build(&req)?;
            optimize_window(&Objective::Grid(&grid), f)?
        }
    };
    write_output(a.out.as_deref().or(cfg.paths.out.as_deref()), &to_json(&op))
}

pub fn fit(a: &FitArgs) -> CliResult<()> {
    let cfg = config::load(a.config.as_deref())?;
    let rows = match a.input.clone().or_else(|| cfg.paths.input.clone()) {
        Some(path) => {
            let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            rest_rows_from_csv::<f64>(&text).map_err(|e| CliError::in_file(&path, e))?
        }
        None => fixtures::table3::<f64>(),
    };
    let model = fit_self_discharge(&rows)?;
    write_output(a.out.as_deref().or(cfg.paths.out.as_deref()), &to_json(&model))
}

pub fn iec_current(a: &IecArgs) -> CliResult<()> {
    let p = match (a.r, &a.device.device) {
        (Some(_), Some(_)) => return Err(CliError::config("use either --r or --device, not both")),
        (Some(r), None) => DeviceParams::new(1.0, r, a.v_rated)?,
        (None, Some(_)) => resolve_device(&a.device, &RunConfig::default(), None)?,
        (None, None) => return Err(CliError::config("r: required (--r or --device)")),
    };
    let w = OperatingWindow::new(a.vmin_pu, a.vmax_pu)?;
    let i = test_current(&p, a.target, &w)?;
    println!("{}", Sig9(i));
    Ok(())
}

pub fn fixtures(a: &FixturesArgs) -> CliResult<()> {
    for (name, text) in fixtures::ALL {
        let path = a.out_dir.join(name);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::ExitClass;
    use supercap::efficiency_no_rest;
    use supercap::trace::read_sidecar;

    fn sim_args(out: &Path) -> SimulateArgs {
        SimulateArgs {
            config: None,
            device: DeviceArgs::default(),
            current: None,
            vmin: None,
            vmax: None,
            rest: None,
            rest_high: None,
            rest_low: None,
            cycles: None,
            steady_tolerance: None,
            sample_period: None,
            quantize: false,
            out: Some(out.to_path_buf()),
        }
    }

    fn analyze_args(trace: &Path, out: &Path) -> AnalyzeArgs {
        AnalyzeArgs {
            config: None,
            trace: Some(trace.to_path_buf()),
            threshold: None,
            min_segment: None,
            steady_tolerance: None,
            out: Some(out.to_path_buf()),
        }
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar_path(Path::new("out/run.csv")), PathBuf::from("out/run.cycles.csv"));
        assert_eq!(sidecar_path(Path::new("trace")), PathBuf::from("trace.cycles.csv"));
    }

    #[test]
    fn simulate_then_analyze_recovers_closed_form_efficiency() {
        let dir = tempfile::tempdir().unwrap();
        let dev = dir.path().join("10F.json");
        fs::write(&dev, r#"{"c_main":10.0,"r_series":0.0922,"v_rated":2.7}"#).unwrap();
        let trace = dir.path().join("run.csv");
        let mut a = sim_args(&trace);
        a.device.device = Some(dev.to_string_lossy().into_owned());
        (a.current, a.vmin, a.vmax, a.cycles) = (Some(0.4), Some(0.5), Some(2.5), Some(20));
        simulate(&a).unwrap();
        assert!(sidecar_path(&trace).exists());

        let report = dir.path().join("report.json");
        analyze(&analyze_args(&trace, &report)).unwrap();
        let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
        assert_eq!(json["schema"], "supercap.analysis/v1");
        assert_eq!(json["steady"]["window"], serde_json::json!([17, 20]));
        let eta = json["steady"]["mean"]["eta"].as_f64().unwrap();
        let p = DeviceParams::new(10.0, 0.0922, 2.7).unwrap();
        let expect = efficiency_no_rest(&p, &CycleSpec::new(0.4, 0.5, 2.5)).unwrap();
        assert!((eta - expect).abs() < 0.002, "{eta} vs {expect}");
    }

    #[test]
    fn inverted_window_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = sim_args(&dir.path().join("x.csv"));
        a.device.device = Some("10F".into());
        (a.vmin, a.vmax) = (Some(2.5), Some(0.5));
        assert_eq!(simulate(&a).unwrap_err().class(), ExitClass::Config);
    }

    #[test]
    fn rests_give_four_phases_per_cycle() {
        let dir = tempfile::tempdir().unwrap();
        let trace = dir.path().join("rest.csv");
        let mut a = sim_args(&trace);
        a.device.device = Some("50F".into());
        (a.rest, a.cycles) = (Some(1800.0), Some(2));
        simulate(&a).unwrap();
        let spans = read_sidecar::<f64, _>(BufReader::new(File::open(sidecar_path(&trace)).unwrap())).unwrap();
        assert_eq!(spans.len(), 8);
        let labels: Vec<_> = spans[..4].iter().map(|s| s.phase.label()).collect();
        assert_eq!(labels, ["charge", "rest_high", "discharge", "rest_low"]);
    }

    #[test]
    fn truncated_trace_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let trace = dir.path().join("cut.csv");
        fs::write(&trace, "t_s,v_V,i_A\n0,1,0\n0.1,1.0").unwrap();
        let err = analyze(&analyze_args(&trace, &dir.path().join("r.json"))).unwrap_err();
        assert_eq!(err.class(), ExitClass::Parse);
        assert!(err.to_string().contains("line 3"), "{err}");
        let missing = analyze(&analyze_args(&dir.path().join("none.csv"), &dir.path().join("r.json"))).unwrap_err();
        assert_eq!(missing.class(), ExitClass::Io);
    }

    #[test]
    fn fixture_map_matches_table() {
        let dir = tempfile::tempdir().unwrap();
        let a = MapArgs {
            config: None,
            device: DeviceArgs { device: Some("100F".into()), ideal: false },
            method: None,
            fixture: Some(FixtureArg::Table2),
            current: None,
            levels: None,
            rest: None,
            rest_model: None,
            out_dir: Some(dir.path().to_path_buf()),
            name: Some("t2".into()),
        };
        map(&a).unwrap();
        let csv = fs::read_to_string(dir.path().join("t2.csv")).unwrap();
        assert!(csv.starts_with("vmpu\\vMpu,0.25,0.5,0.7,0.9,1\n0,0.623,"), "{csv}");
        assert!(fs::read_to_string(dir.path().join("t2.svg")).unwrap().contains("94.1"));
        let mut bad = a.clone();
        bad.method = Some(MethodArg::Simulated);
        assert_eq!(map(&bad).unwrap_err().class(), ExitClass::Config);
    }

    #[test]
    fn closed_form_optimum() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("op.json");
        let a = OptimizeArgs {
            config: None,
            device: DeviceArgs::default(),
            method: Some(MethodArg::Closedform),
            min_energy: Some(0.75),
            current: None,
            levels: None,
            rest: None,
            rest_model: None,
            out: Some(out.clone()),
        };
        optimize(&a).unwrap();
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(v["window"]["min_pu"], 0.5);
        assert_eq!(v["window"]["max_pu"], 1.0);
        let mut over = a.clone();
        over.min_energy = Some(1.5);
        assert_eq!(optimize(&over).unwrap_err().class(), ExitClass::Config);
    }

    #[test]
    fn config_file_is_overridden_by_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.json");
        let trace = dir.path().join("cfg.csv");
        fs::write(
            &cfg,
            format!(
                r#"{{"version":1,"device":"10F","ideal":true,"spec":{{"current":0.4,"vmin":0.5,"vmax":2.5,"cycles":5}},"paths":{{"out":{:?}}}}}"#,
                trace.to_string_lossy()
            ),
        )
        .unwrap();
        let mut a = sim_args(&trace);
        a.out = None;
        a.config = Some(cfg);
        a.cycles = Some(2);
        simulate(&a).unwrap();
        let spans = read_sidecar::<f64, _>(BufReader::new(File::open(sidecar_path(&trace)).unwrap())).unwrap();
        assert_eq!(spans.last().unwrap().cycle, 2);
    }

    #[test]
    fn fit_reads_external_rows() {
        let dir = tempfile::tempdir().unwrap();
        let rows = dir.path().join("rest.csv");
        fs::write(&rows, "vm_V,vM_V,v_sd_mV,v_sc_mV\n0,1,55,42\n0,2,105,82\n1,2.5,80,62\n").unwrap();
        let out = dir.path().join("m.json");
        fit(&FitArgs { config: None, input: Some(rows), out: Some(out.clone()) }).unwrap();
        let m: SelfDischargeModel<f64> = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
        assert!((m.slope_sd - 50.0).abs() < 1e-9 && (m.intercept_sd - 5.0).abs() < 1e-9);
    }
}
