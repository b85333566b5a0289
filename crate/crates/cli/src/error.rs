use std::path::PathBuf;

use thiserror::Error;

/// Exit code for a bad command line, configuration or parameter.
pub const EXIT_USAGE: i32 = 2;
/// Exit code for failures while running or writing results.
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot use config file {path}: {msg}")]
    Config { path: PathBuf, msg: String },
    #[error("cannot use manifest {path}: {msg}")]
    Manifest { path: PathBuf, msg: String },
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(String),
    #[error("simulation failed: {0}")]
    Runtime(#[from] stcomb::Error),
    #[error("{0} self-test check(s) failed")]
    SelftestFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } | CliError::Manifest { .. } | CliError::Invalid(_) => {
                EXIT_USAGE
            }
            CliError::Io { .. } | CliError::Csv(_) | CliError::Runtime(_) | CliError::SelftestFailed(_) => {
                EXIT_RUNTIME
            }
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Validation failures in the library are parameter errors at this level.
pub(crate) fn invalid(e: stcomb::Error) -> CliError {
    CliError::Invalid(e.to_string())
}
