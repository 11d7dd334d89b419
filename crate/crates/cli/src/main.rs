//! `supercap`: simulate cycling tests, analyze traces, build efficiency maps.
//!
//! Exit codes: 0 success, 2 invalid configuration or usage, 3 unparsable
//! input, 4 numerical failure, 5 I/O failure.

// `!(x > y)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "supercap", version, about = "Supercapacitor round-trip efficiency workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a constant-current cycling test and write the trace CSV plus a `.cycles.csv` sidecar.
    Simulate(SimulateArgs),
    /// Analyze a trace CSV and emit a JSON report.
    Analyze(AnalyzeArgs),
    /// Build an efficiency map over per-unit voltage windows (CSV + SVG).
    Map(MapArgs),
    /// Find the most efficient window that still provides a given share of the stored energy.
    Optimize(OptimizeArgs),
    /// Fit the linear rest-voltage model to a table of measured rest voltages.
    FitSelfdischarge(FitArgs),
    /// Current at which the closed-form efficiency reaches a target.
    IecCurrent(IecArgs),
    /// Export the embedded measurement tables as CSV files.
    Fixtures(FixturesArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct DeviceArgs {
    /// Preset (10F, 50F, 100F) or path to a device JSON file.
    #[arg(long)]
    pub device: Option<String>,
    /// Drop the redistribution branch and leakage (series-RC only).
    #[arg(long)]
    pub ideal: bool,
}

#[derive(Args, Debug, Clone)]
pub struct SimulateArgs {
    /// Versioned JSON run configuration; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub device: DeviceArgs,
    /// Charge and discharge current (A).
    #[arg(long)]
    pub current: Option<f64>,
    /// Discharge end voltage (V).
    #[arg(long)]
    pub vmin: Option<f64>,
    /// Charge end voltage (V).
    #[arg(long)]
    pub vmax: Option<f64>,
    /// Rest after both charge and discharge (s).
    #[arg(long)]
    pub rest: Option<f64>,
    /// Rest after charge (s); overrides --rest.
    #[arg(long)]
    pub rest_high: Option<f64>,
    /// Rest after discharge (s); overrides --rest.
    #[arg(long)]
    pub rest_low: Option<f64>,
    /// Number of cycles.
    #[arg(long)]
    pub cycles: Option<usize>,
    /// Relative charge imbalance counted as steady.
    #[arg(long)]
    pub steady_tolerance: Option<f64>,
    /// Sample period (s).
    #[arg(long)]
    pub sample_period: Option<f64>,
    /// Round samples to the acquisition quanta.
    #[arg(long)]
    pub quantize: bool,
    /// Trace CSV path; the sidecar goes next to it.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Trace CSV (`t_s,v_V,i_A`).
    pub trace: Option<PathBuf>,
    /// Active-current threshold as a fraction of the peak current.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Minimum segment duration (s).
    #[arg(long)]
    pub min_segment: Option<f64>,
    /// Relative charge imbalance counted as steady.
    #[arg(long)]
    pub steady_tolerance: Option<f64>,
    /// Report path (stdout if omitted).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodArg {
    #[value(alias = "closed-form", alias = "closed_form")]
    Closedform,
    Simulated,
    #[value(alias = "paper-fixture")]
    Fixture,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureArg {
    Table2,
    Table4,
}

#[derive(Args, Debug, Clone)]
pub struct MapArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub device: DeviceArgs,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Measured table to map (implies --method fixture).
    #[arg(long, value_enum)]
    pub fixture: Option<FixtureArg>,
    /// Cycling current (A); defaults to the preset's test current.
    #[arg(long)]
    pub current: Option<f64>,
    /// Comma-separated per-unit levels.
    #[arg(long)]
    pub levels: Option<String>,
    /// Rest after charge and discharge (s).
    #[arg(long)]
    pub rest: Option<f64>,
    /// Rest-voltage model JSON (from fit-selfdischarge); defaults to the fit of the embedded table.
    #[arg(long)]
    pub rest_model: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Base name of the CSV and SVG files.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub device: DeviceArgs,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Required share of the stored energy, `vM² - vm²`.
    #[arg(long)]
    pub min_energy: Option<f64>,
    #[arg(long)]
    pub current: Option<f64>,
    /// Grid levels for the simulated and fixture methods.
    #[arg(long)]
    pub levels: Option<String>,
    #[arg(long)]
    pub rest: Option<f64>,
    #[arg(long)]
    pub rest_model: Option<PathBuf>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct FitArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// CSV with columns `[dV_V,]vm_V,vM_V,v_sd_mV,v_sc_mV`; defaults to the embedded table.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct IecArgs {
    /// Series resistance (Ω); alternative to --device.
    #[arg(long)]
    pub r: Option<f64>,
    #[command(flatten)]
    pub device: DeviceArgs,
    /// Target efficiency.
    #[arg(long, default_value_t = 0.95)]
    pub target: f64,
    #[arg(long, default_value_t = 0.0)]
    pub vmin_pu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub vmax_pu: f64,
    /// Rated voltage (V) when --r is used.
    #[arg(long, default_value_t = 2.7)]
    pub v_rated: f64,
}

#[derive(Args, Debug, Clone)]
pub struct FixturesArgs {
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Analyze(a) => commands::analyze(&a),
        Command::Map(a) => commands::map(&a),
        Command::Optimize(a) => commands::optimize(&a),
        Command::FitSelfdischarge(a) => commands::fit(&a),
        Command::IecCurrent(a) => commands::iec_current(&a),
        Command::Fixtures(a) => commands::fixtures(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
