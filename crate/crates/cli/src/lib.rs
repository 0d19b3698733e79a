//! Experiment runner reproducing the figures of the two-group three-level oscillator model.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod svg;

pub use config::{resolve, ExperimentConfig, ExperimentId, Overrides};
pub use error::{CliError, CliResult};
pub use experiments::{execute, run, ResultBundle};
