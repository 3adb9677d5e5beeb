//! Error classes mapped onto the process exit status.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flag values or config keys; exit status 2.
    #[error("{0}")]
    Usage(String),

    /// Malformed input or a numerical failure; exit status 1.
    #[error(transparent)]
    Data(#[from] fsacf::FsacfError),

    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },

    #[error("output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
