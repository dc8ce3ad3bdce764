//! Running a config end to end: validation, computation, staged writes, manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::experiments::{run_experiment, Artifact};
use crate::format::write_json;

/// Output-directory override; wins over the config file, loses to `--out`.
pub const OUT_DIR_ENV: &str = "QWSENSE_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "qwsense-out";
pub const MANIFEST_NAME: &str = "manifest.json";
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: &'static str,
    pub config: ExperimentConfig,
    pub generator: &'static str,
    pub seed: u64,
    pub threads: usize,
    pub started_unix_seconds: u64,
    pub wall_clock_seconds: f64,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn resolve_out_dir(cli: Option<&Path>, config: &ExperimentConfig) -> PathBuf {
    if let Some(p) = cli {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    config.output_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::Core(qwsense_core::Error::Capacity(e.to_string())))
}

/// Writes every artifact into a staging directory, then moves each into place.
/// The manifest is moved last, so its presence marks a complete run.
fn commit(out: &Path, files: &[Artifact], manifest: &[u8]) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let staging = out.join(format!(".staging-{}", std::process::id()));
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(|e| CliError::io(&staging, e))?;
    }
    fs::create_dir(&staging).map_err(|e| CliError::io(&staging, e))?;
    let result = (|| {
        for f in files {
            let p = staging.join(&f.name);
            fs::write(&p, &f.bytes).map_err(|e| CliError::io(&p, e))?;
        }
        let m = staging.join(MANIFEST_NAME);
        fs::write(&m, manifest).map_err(|e| CliError::io(&m, e))?;
        for name in files.iter().map(|f| f.name.as_str()).chain([MANIFEST_NAME]) {
            let dest = out.join(name);
            fs::rename(staging.join(name), &dest).map_err(|e| CliError::io(&dest, e))?;
        }
        Ok(())
    })();
    let _ = fs::remove_dir_all(&staging);
    result
}

/// Applies command-line overrides and validates.
pub fn prepare(mut config: ExperimentConfig, opts: &RunOptions) -> Result<ExperimentConfig> {
    if let Some(s) = opts.seed {
        config.seed = s;
    }
    config.validate()?;
    if opts.threads == Some(0) {
        return Err(CliError::Validation(crate::config::Violations(vec![crate::config::Violation {
            field: "--threads".into(),
            message: "must be at least 1".into(),
        }])));
    }
    Ok(config)
}

pub fn run(config: ExperimentConfig, opts: &RunOptions) -> Result<(PathBuf, RunManifest)> {
    let config = prepare(config, opts)?;
    let out = resolve_out_dir(opts.out.as_deref(), &config);
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    let pool = thread_pool(opts.threads)?;
    let threads = pool.current_num_threads();
    let files = pool.install(|| run_experiment(&config))?;
    let manifest = RunManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        experiment: config.experiment.as_str(),
        generator: qwsense_core::rng::GENERATOR,
        seed: config.seed,
        threads,
        started_unix_seconds: started,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
        files: files
            .iter()
            .map(|f| FileEntry {
                name: f.name.clone(),
                sha256: sha256_hex(&f.bytes),
                bytes: f.bytes.len() as u64,
                schema: f.schema.clone(),
            })
            .collect(),
        config,
    };
    commit(&out, &files, &write_json(&manifest))?;
    Ok((out, manifest))
}
