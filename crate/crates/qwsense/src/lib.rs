//! Config-driven experiment runner for `qwsense-core`: TOML configs in, CSV and JSON
//! data, SVG plots and a hashed manifest out.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod format;
pub mod plot;
pub mod run;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use run::{run, RunManifest, RunOptions};
