//! Experiment runner: JSON configs in, CSV or JSON-lines reports out.

pub mod config;
pub mod presets;
pub mod report;
pub mod run;

pub use config::{load_config, ExperimentConfig, ExperimentKind, GridPoint};
pub use presets::preset;
pub use report::{emit_report, load_report_jsonl, write_report, ReportFormat, ResultRow};
pub use run::{run_experiment, run_experiment_with, trial_seed};
