//! Config-driven experiment runner for `lambda-core`.

// `!(x <= y)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod report;
pub mod run;

pub use config::{parse_config, ConfigError, ConfigErrors, Experiment, ExperimentConfig, ExperimentKind};
pub use report::{emit_report, Format};
pub use run::{run_experiments, ReportBundle, Status};

/// The config behind the `demo` subcommand.
pub const DEMO_CONFIG: &str = include_str!("demo.toml");

pub fn demo_config() -> ExperimentConfig {
    parse_config(DEMO_CONFIG).expect("built-in demo config is valid")
}
