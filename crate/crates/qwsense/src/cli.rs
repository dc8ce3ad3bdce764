use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::plot::{render_file, PlotKind};
use crate::run::{prepare, run, RunOptions};

#[derive(Debug, Parser)]
#[command(name = "qwsense", version, about = "Quantum-walk sensing experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides QWSENSE_OUT_DIR and the config).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Render a data file as SVG.
    Plot {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        kind: PlotKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Runs one command, returning the text to print on success.
pub fn execute(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Run { config, out, seed, threads } => {
            let c = ExperimentConfig::load(&config)?;
            let (dir, manifest) = run(c, &RunOptions { out, seed, threads })?;
            Ok(format!(
                "wrote {} files to {} in {:.3}s",
                manifest.files.len() + 1,
                dir.display(),
                manifest.wall_clock_seconds
            ))
        }
        Command::Plot { data, kind, out } => {
            let svg = render_file(&data, kind)?;
            std::fs::write(&out, svg).map_err(|e| CliError::io(&out, e))?;
            Ok(format!("wrote {}", out.display()))
        }
        Command::Validate { config } => {
            let c = ExperimentConfig::load(&config)?;
            prepare(c, &RunOptions::default())?;
            Ok(format!("{}: ok", config.display()))
        }
    }
}
