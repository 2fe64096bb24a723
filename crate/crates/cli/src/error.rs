use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_VALIDATION: u8 = 3;
pub const EXIT_FIT: u8 = 4;
pub const EXIT_IO: u8 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {message}", path.display())]
    Invalid { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{failed} of {total} cells were not fitted; see quarantine/")]
    Partial { failed: usize, total: usize },
    #[error("{0}")]
    Fit(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => EXIT_IO,
            CliError::Invalid { .. } | CliError::Config(_) => EXIT_VALIDATION,
            CliError::Partial { .. } | CliError::Fit(_) => EXIT_FIT,
        }
    }
}
