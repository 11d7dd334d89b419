//! Measured reference tables shipped with the crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const TABLE1_CSV: &str = include_str!("../../fixtures/table1.csv");
pub const TABLE2_CSV: &str = include_str!("../../fixtures/table2.csv");
pub const TABLE3_CSV: &str = include_str!("../../fixtures/table3.csv");
pub const TABLE4_CSV: &str = include_str!("../../fixtures/table4.csv");

/// All fixture files as `(file name, contents)`.
pub const ALL: [(&str, &str); 4] = [
    ("table1.csv", TABLE1_CSV),
    ("table2.csv", TABLE2_CSV),
    ("table3.csv", TABLE3_CSV),
    ("table4.csv", TABLE4_CSV),
];

/// The three measured cells of the efficiency tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PaperDevice {
    #[serde(rename = "10F")]
    C10,
    #[serde(rename = "50F")]
    C50,
    #[serde(rename = "100F")]
    C100,
}

impl PaperDevice {
    pub const ALL: [PaperDevice; 3] = [PaperDevice::C10, PaperDevice::C50, PaperDevice::C100];

    pub fn farads(self) -> f64 {
        match self {
            PaperDevice::C10 => 10.0,
            PaperDevice::C50 => 50.0,
            PaperDevice::C100 => 100.0,
        }
    }

    /// Current used for the window sweeps of this cell (A).
    pub fn test_current(self) -> f64 {
        match self {
            PaperDevice::C10 => 1.13,
            PaperDevice::C50 => 3.95,
            PaperDevice::C100 => 4.7,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PaperDevice::C10 => "10F",
            PaperDevice::C50 => "50F",
            PaperDevice::C100 => "100F",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.label().eq_ignore_ascii_case(s))
    }

    /// Matches a capacitance to one of the measured cells (within 1%).
    pub fn from_capacitance(c: f64) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|d| ((c - d.farads()) / d.farads()).abs() < 0.01)
    }

    fn column(self) -> usize {
        match self {
            PaperDevice::C10 => 2,
            PaperDevice::C50 => 3,
            PaperDevice::C100 => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurrentEfficiency<T> {
    pub current: T,
    /// Fraction, not percent.
    pub eta: T,
}

/// One row of an efficiency table; `eta` as fractions for 10 F, 50 F, 100 F.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowEfficiency<T> {
    pub vm_pu: T,
    pub vmax_pu: T,
    pub eta: [T; 3],
}

impl<T: Scalar> WindowEfficiency<T> {
    pub fn for_device(&self, d: PaperDevice) -> T {
        self.eta[d.column() - 2]
    }
}

/// One row of the rest-voltage table. Window voltages in volts, rest voltages
/// in millivolts as printed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestVoltageRow<T> {
    pub vm: T,
    pub vmax: T,
    pub v_sd_mv: T,
    pub v_sc_mv: T,
}

/// Parses comma-separated numeric rows after `#` comments and one header.
pub fn parse_numeric_csv<T: Scalar>(text: &str, columns: usize) -> Result<Vec<Vec<T>>> {
    let mut rows = Vec::new();
    let mut header_seen = false;
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns {
            return Err(Error::Parse {
                line: k + 1,
                reason: format!("expected {columns} fields, found {}", fields.len()),
            });
        }
        let row = fields
            .iter()
            .map(|f| {
                f.trim().parse::<f64>().map(T::lit).map_err(|_| Error::Parse {
                    line: k + 1,
                    reason: format!("not a number: `{f}`"),
                })
            })
            .collect::<Result<Vec<T>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn table1<T: Scalar>() -> Vec<CurrentEfficiency<T>> {
    parse_numeric_csv::<T>(TABLE1_CSV, 2)
        .expect("embedded table1")
        .into_iter()
        .map(|r| CurrentEfficiency {
            current: r[0],
            eta: r[1] / T::lit(100.0),
        })
        .collect()
}

fn window_table<T: Scalar>(text: &str) -> Vec<WindowEfficiency<T>> {
    parse_numeric_csv::<T>(text, 5)
        .expect("embedded efficiency table")
        .into_iter()
        .map(|r| WindowEfficiency {
            vm_pu: r[0],
            vmax_pu: r[1],
            eta: [r[2], r[3], r[4]].map(|x| x / T::lit(100.0)),
        })
        .collect()
}

/// Efficiency without rest.
pub fn table2<T: Scalar>() -> Vec<WindowEfficiency<T>> {
    window_table(TABLE2_CSV)
}

/// Efficiency with 30 minute rests.
pub fn table4<T: Scalar>() -> Vec<WindowEfficiency<T>> {
    window_table(TABLE4_CSV)
}

pub fn table3<T: Scalar>() -> Vec<RestVoltageRow<T>> {
    rest_rows_from_csv(TABLE3_CSV).expect("embedded table3")
}

/// Reads rest-voltage rows from a CSV shaped like `table3.csv`
/// (`dV_V,vm_V,vM_V,v_sd_mV,v_sc_mV`) or without the leading span column.
pub fn rest_rows_from_csv<T: Scalar>(text: &str) -> Result<Vec<RestVoltageRow<T>>> {
    let header = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .unwrap_or("");
    let columns = header.split(',').count();
    let offset = match columns {
        5 => 1,
        4 => 0,
        n => {
            return Err(Error::Parse {
                line: 1,
                reason: format!("expected 4 or 5 columns, found {n}"),
            })
        }
    };
    Ok(parse_numeric_csv::<T>(text, columns)?
        .into_iter()
        .map(|r| RestVoltageRow {
            vm: r[offset],
            vmax: r[offset + 1],
            v_sd_mv: r[offset + 2],
            v_sc_mv: r[offset + 3],
        })
        .collect())
}
