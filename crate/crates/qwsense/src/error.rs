use std::path::{Path, PathBuf};

use crate::config::Violations;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config could not be parsed: {0}")]
    Parse(String),
    #[error("invalid config:\n{0}")]
    Validation(Violations),
    #[error(transparent)]
    Core(#[from] qwsense_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Validation(_) => 2,
            CliError::Core(qwsense_core::Error::InvalidArgument(_)) => 2,
            CliError::MissingColumn { .. } | CliError::Data { .. } => 2,
            CliError::Core(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
