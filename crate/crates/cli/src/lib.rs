//! Experiment runner for `shellcap-core`: configuration, grid pipelines and
//! versioned CSV/JSON reports.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod report;

pub use config::{Cell, ExperimentConfig, FormSpec, Module, QuasimodeSelect};
pub use error::CliError;
pub use pipeline::{region_rows, run_experiment};
pub use report::{emit_report, Artifact, Format, Manifest, ReportBundle};
