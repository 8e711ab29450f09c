//! Config-driven experiment runner: reads a TOML description, runs the
//! requested pipeline from `quench-core`, and writes CSV tables plus a JSON
//! manifest.

pub mod config;
pub mod error;
mod figures;
pub mod output;
pub mod runner;

pub use config::{convert_time, ExperimentConfig};
pub use error::RunError;
pub use output::Manifest;
pub use runner::{compute, run_experiment, Command, ConfigSource, Figure, Report};
