//! Experiment runner for the `d2d-offload` model: parameter sweeps, figure
//! presets and analytic-vs-simulation comparison reports, written as CSV or
//! JSON.

pub mod compare;
pub mod preset;
pub mod reports;
pub mod setup;
pub mod sweep;
pub mod table;

pub use compare::{compare_configs, compare_report, CompareReport, CompareRow, CompareSettings};
pub use preset::{figure_preset, run_preset, Preset, PRESET_NAMES};
pub use setup::load_config;
pub use sweep::{run_sweep, Grid, SweepSpec, Variable};
pub use table::{Cell, Table};
