//! Configuration, experiment suites and CSV output for the `aia` command.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod output;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind, Overrides};
pub use experiments::{run, Report};
