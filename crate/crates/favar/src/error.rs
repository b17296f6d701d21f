use std::path::{Path, PathBuf};

use favar_core::ErrorKind;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] favar_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("configuration: {0}")]
    Config(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn format(path: &Path, message: impl Into<String>) -> Self {
        CliError::Format { path: path.to_path_buf(), message: message.into() }
    }

    /// Process exit status: 2 for invalid input or settings, 3 for numerical
    /// failures, 4 for file problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(e) => match e.kind() {
                ErrorKind::Validation => 2,
                ErrorKind::Numerical => 3,
            },
            CliError::Config(_) => 2,
            CliError::Io { .. } | CliError::Format { .. } => 4,
        }
    }

    /// Short machine-readable category printed alongside the message.
    pub fn category(&self) -> &'static str {
        match self.exit_code() {
            2 => "validation",
            3 => "numerical",
            _ => "io",
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
