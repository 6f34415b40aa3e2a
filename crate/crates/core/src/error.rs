use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("numerical failure at t = {t}: {message}")]
    Numerical { t: f64, message: String },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("checksum mismatch for {path}: expected {expected:016x}, found {found:016x}")]
    Checksum {
        path: PathBuf,
        expected: u64,
        found: u64,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidGrid(_) | Error::InvalidInput(_) => 2,
            Error::Numerical { .. } | Error::Singular(_) => 3,
            Error::Io { .. } | Error::Checksum { .. } | Error::GridMismatch(_) => 4,
        }
    }
}
