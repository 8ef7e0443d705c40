//! Experiment runner: presets, the learning loop, trace files and stability reports.

pub mod config;
pub mod csv;
pub mod run;

pub use config::{ExperimentConfig, Expectation, Preset, Settings};
pub use csv::{emit_csv, format_csv, parse_csv, read_csv};
pub use run::{report_stability, run_experiment, run_preset, Outcome, RunTrace, TraceRow};
