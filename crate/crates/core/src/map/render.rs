use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::grid::EfficiencyGrid;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::trace::Sig9;

const CELL: f64 = 72.0;
const LEFT: f64 = 70.0;
const TOP: f64 = 40.0;
const LEGEND_W: f64 = 110.0;
const BOTTOM: f64 = 60.0;

/// Colour stops from low to high efficiency.
const STOPS: [(u8, u8, u8); 5] = [
    (68, 1, 84),
    (59, 82, 139),
    (33, 145, 140),
    (94, 201, 98),
    (253, 231, 37),
];

/// Grid as CSV: one row per `vm` level, one column per `vM` level, efficiency
/// as a fraction, empty where undefined.
pub fn grid_csv<T: Scalar>(grid: &EfficiencyGrid<T>) -> String {
    let mut out = String::from("vmpu\\vMpu");
    for l in &grid.vmax_levels {
        let _ = write!(out, ",{}", Sig9(l.as_f64()));
    }
    out.push('\n');
    for (r, row) in grid.eta.iter().enumerate() {
        let _ = write!(out, "{}", Sig9(grid.vm_levels[r].as_f64()));
        for e in row {
            out.push(',');
            if let Some(e) = e {
                let _ = write!(out, "{}", Sig9(e.as_f64()));
            }
        }
        out.push('\n');
    }
    out
}

fn colour(x: f64) -> String {
    let x = x.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let k = (x.floor() as usize).min(STOPS.len() - 2);
    let t = x - k as f64;
    let mix = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * t).round() as u8;
    let (a, b) = (STOPS[k], STOPS[k + 1]);
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn label(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Cell-based SVG map: `vM` on the horizontal axis, `vm` on the vertical axis
/// (increasing upwards), one labelled square per defined cell.
pub fn grid_svg<T: Scalar>(grid: &EfficiencyGrid<T>) -> Result<String> {
    let (rows, cols) = grid.defined_extent();
    if rows < 2 || cols < 2 {
        return Err(Error::InsufficientData(format!(
            "map needs at least 2x2 defined cells, found {rows} row(s) x {cols} column(s)"
        )));
    }
    let n_r = grid.vm_levels.len();
    let n_c = grid.vmax_levels.len();
    let values: Vec<f64> = grid.defined_cells().map(|(_, _, e)| e.as_f64()).collect();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = |e: f64| if hi > lo { (e - lo) / (hi - lo) } else { 1.0 };

    let width = LEFT + CELL * n_c as f64 + LEGEND_W;
    let height = TOP + CELL * n_r as f64 + BOTTOM;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="13">"#
    );
    let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let title = format!(
        "Round-trip efficiency ({}{})",
        match grid.method {
            super::grid::GridMethod::ClosedForm => "closed form",
            super::grid::GridMethod::Simulated => "simulated",
            super::grid::GridMethod::PaperFixture => "measured",
        },
        if grid.rest { ", with rest" } else { "" }
    );
    let _ = writeln!(s, r#"<text x="{LEFT}" y="24" font-size="15">{title}</text>"#);

    for (r, row) in grid.eta.iter().enumerate() {
        // vm increases upwards
        let y = TOP + CELL * (n_r - 1 - r) as f64;
        for (c, e) in row.iter().enumerate() {
            let x = LEFT + CELL * c as f64;
            match e {
                Some(e) => {
                    let e = e.as_f64();
                    let fill = colour(scale(e));
                    let ink = if scale(e) > 0.6 { "black" } else { "white" };
                    let _ = writeln!(
                        s,
                        r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="white"/>"#
                    );
                    let _ = writeln!(
                        s,
                        r#"<text x="{}" y="{}" text-anchor="middle" fill="{ink}">{:.1}</text>"#,
                        x + CELL / 2.0,
                        y + CELL / 2.0 + 5.0,
                        e * 100.0
                    );
                }
                None => {
                    let _ = writeln!(
                        s,
                        r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="#f2f2f2" stroke="white"/>"##
                    );
                }
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            LEFT - 8.0,
            y + CELL / 2.0 + 5.0,
            label(grid.vm_levels[r].as_f64())
        );
    }
    let axis_y = TOP + CELL * n_r as f64;
    for (c, l) in grid.vmax_levels.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + CELL * (c as f64 + 0.5),
            axis_y + 18.0,
            label(l.as_f64())
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">maximum voltage vM (p.u.)</text>"#,
        LEFT + CELL * n_c as f64 / 2.0,
        axis_y + 42.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">minimum voltage vm (p.u.)</text>"#,
        TOP + CELL * n_r as f64 / 2.0
    );

    // legend: five swatches from high to low
    let lx = LEFT + CELL * n_c as f64 + 24.0;
    let _ = writeln!(s, r#"<text x="{lx}" y="{}">efficiency</text>"#, TOP - 6.0);
    let sw = 22.0;
    for k in 0..5 {
        let frac = 1.0 - k as f64 / 4.0;
        let y = TOP + sw * k as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{lx}" y="{y}" width="{sw}" height="{sw}" fill="{}"/>"#,
            colour(frac)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{:.1}%</text>"#,
            lx + sw + 6.0,
            y + sw / 2.0 + 5.0,
            (lo + (hi - lo) * frac) * 100.0
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Writes `<basename>.csv` and `<basename>.svg` into `dir`.
pub fn render_map<T: Scalar>(
    grid: &EfficiencyGrid<T>,
    dir: &Path,
    basename: &str,
) -> Result<(PathBuf, PathBuf)> {
    let svg = grid_svg(grid)?;
    let csv_path = dir.join(format!("{basename}.csv"));
    let svg_path = dir.join(format!("{basename}.svg"));
    fs::write(&csv_path, grid_csv(grid))?;
    fs::write(&svg_path, svg)?;
    Ok((csv_path, svg_path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::grid::{build_grid, GridMethod, DEFAULT_LEVELS};
    use crate::model::DeviceParams;

    fn table2_100f() -> EfficiencyGrid<f64> {
        let p = DeviceParams::new(100.0, 0.0074, 2.7).unwrap();
        build_grid(&p, 4.7, &[], None, GridMethod::PaperFixture).unwrap()
    }

    #[test]
    fn csv_layout() {
        let csv = grid_csv(&table2_100f());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "vmpu\\vMpu,0.25,0.5,0.7,0.9,1");
        assert_eq!(lines[1], "0,0.623,0.79,0.849,0.878,0.891");
        assert!(lines[5].starts_with("0.9,,,,,0.941"));
    }

    #[test]
    fn svg_contains_cell_labels_and_is_deterministic() {
        let g = table2_100f();
        let a = grid_svg(&g).unwrap();
        assert!(a.contains(">94.1<"));
        assert!(a.contains(">62.3<"));
        assert_eq!(a, grid_svg(&g).unwrap());
    }

    #[test]
    fn single_cell_is_rejected() {
        let p = DeviceParams::new(10.0, 0.01, 2.7).unwrap();
        let g = build_grid(&p, 1.0, &[0.5, 1.0], None, GridMethod::ClosedForm).unwrap();
        assert!(grid_svg(&g).is_err());
        let g = build_grid(&p, 1.0, &DEFAULT_LEVELS, None, GridMethod::ClosedForm).unwrap();
        assert!(grid_svg(&g).is_ok());
    }

    #[test]
    fn writes_both_files() {
        let dir = tempfile::tempdir().unwrap();
        let (c, s) = render_map(&table2_100f(), dir.path(), "t2").unwrap();
        assert!(c.exists() && s.exists());
        assert!(render_map(&table2_100f(), &dir.path().join("missing"), "t2").is_err());
    }
}
