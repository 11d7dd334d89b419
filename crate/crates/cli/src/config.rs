//! Versioned JSON run configuration. Every field is optional; command-line
//! flags take precedence over the file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use supercap::map::{PaperDevice, SelfDischargeModel};
use supercap::{presets, DeviceParams};

use crate::error::{CliError, CliResult};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub device: Option<DeviceRef>,
    /// Drop the redistribution branch and leakage from the device.
    pub ideal: Option<bool>,
    #[serde(default)]
    pub spec: SpecSection,
    #[serde(default)]
    pub acquisition: AcquisitionSection,
    #[serde(default)]
    pub analyzer: AnalyzerSection,
    #[serde(default)]
    pub map: MapSection,
    #[serde(default)]
    pub paths: PathsSection,
}

/// A preset name (`10F`, `50F`, `100F`), a path to a device JSON file, or
/// inline device parameters.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum DeviceRef {
    Name(String),
    Inline(DeviceParams<f64>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecSection {
    pub current: Option<f64>,
    pub vmin: Option<f64>,
    pub vmax: Option<f64>,
    /// Both rests (s).
    pub rest: Option<f64>,
    pub rest_high: Option<f64>,
    pub rest_low: Option<f64>,
    pub cycles: Option<usize>,
    pub steady_tolerance: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcquisitionSection {
    pub sample_period: Option<f64>,
    pub v_quantum: Option<f64>,
    pub i_quantum: Option<f64>,
    pub quantize: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzerSection {
    pub threshold: Option<f64>,
    pub min_segment: Option<f64>,
    pub steady_tolerance: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSection {
    pub method: Option<String>,
    pub fixture: Option<String>,
    pub current: Option<f64>,
    pub levels: Option<Vec<f64>>,
    pub rest: Option<f64>,
    pub rest_model: Option<PathBuf>,
    pub min_energy: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    pub trace: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub name: Option<String>,
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError::Json {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Loads a config file, or the empty config when no path is given.
pub fn load(path: Option<&Path>) -> CliResult<RunConfig> {
    let Some(path) = path else {
        return Ok(RunConfig {
            version: CONFIG_VERSION,
            ..Default::default()
        });
    };
    let cfg: RunConfig = parse_json(path, &read_text(path)?)?;
    if cfg.version != CONFIG_VERSION {
        return Err(CliError::config(format!(
            "{}: version: unsupported config version {} (expected {CONFIG_VERSION})",
            path.display(),
            cfg.version
        )));
    }
    Ok(cfg)
}

/// Resolves a device given on the command line: a preset name or a JSON file.
pub fn device_from_arg(arg: &str) -> CliResult<DeviceParams<f64>> {
    resolve_device(&DeviceRef::Name(arg.to_string()))
}

pub fn resolve_device(d: &DeviceRef) -> CliResult<DeviceParams<f64>> {
    let p = match d {
        DeviceRef::Inline(p) => *p,
        DeviceRef::Name(name) => match presets::by_name::<f64>(name) {
            Some(p) => p?,
            None => {
                let path = Path::new(name);
                if !path.exists() {
                    return Err(CliError::config(format!(
                        "device: `{name}` is neither a preset (10F, 50F, 100F) nor an existing file"
                    )));
                }
                parse_json(path, &read_text(path)?)?
            }
        },
    };
    p.validate()?;
    Ok(p)
}

/// The measured cell a device corresponds to, if any.
pub fn paper_device(p: &DeviceParams<f64>) -> Option<PaperDevice> {
    PaperDevice::from_capacitance(p.c_main)
}

pub fn load_rest_model(path: &Path) -> CliResult<SelfDischargeModel<f64>> {
    parse_json(path, &read_text(path)?)
}

/// `--levels 0,0.25,0.5` style lists.
pub fn parse_levels(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| CliError::config(format!("levels: `{x}` is not a number")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        fs::write(
            &path,
            r#"{"version":1,"device":"10F","spec":{"current":0.4,"vmin":0.5,"vmax":2.5},"acquisition":{"quantize":true}}"#,
        )
        .unwrap();
        let cfg = load(Some(&path)).unwrap();
        assert_eq!(cfg.spec.current, Some(0.4));
        assert_eq!(cfg.acquisition.quantize, Some(true));
        let p = resolve_device(cfg.device.as_ref().unwrap()).unwrap();
        assert_eq!(p.c_main, 10.0);
    }

    #[test]
    fn wrong_version_and_unknown_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        fs::write(&path, r#"{"version":2}"#).unwrap();
        assert!(matches!(load(Some(&path)), Err(CliError::Config(_))));
        fs::write(&path, r#"{"version":1,"spec":{"curent":1}}"#).unwrap();
        assert!(matches!(load(Some(&path)), Err(CliError::Json { .. })));
    }

    #[test]
    fn inline_device_is_validated() {
        let d: DeviceRef = serde_json::from_str(r#"{"c_main":-1,"r_series":0.01,"v_rated":2.7}"#).unwrap();
        assert!(resolve_device(&d).is_err());
        assert!(device_from_arg("no-such-device").is_err());
    }

    #[test]
    fn levels() {
        assert_eq!(parse_levels("0, 0.5,1").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(parse_levels("0,x").is_err());
    }
}
