//! Efficiency over operating windows: grids, the rest-voltage model, the
//! window optimizer and map rendering.

pub mod fixtures;
mod grid;
mod optimize;
mod render;
mod selfdischarge;

pub use fixtures::PaperDevice;
pub use grid::{
    build_grid, build_grid_with, EfficiencyGrid, GridMethod, RestSetting, SimulationSettings,
    DEFAULT_LEVELS, REFERENCE_REST_S,
};
pub use optimize::{optimize_window, Objective, OperatingPoint};
pub use render::{grid_csv, grid_svg, render_map};
pub use selfdischarge::{fit_self_discharge, SelfDischargeModel, MIN_FIT_QUALITY};
