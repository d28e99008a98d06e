use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors of the IO and orchestration layer.
#[derive(Debug, Error)]
pub enum Error {
    /// Bytes on disk do not follow the session format.
    #[error("{}: format error at byte {offset}: {message}", path.display())]
    Format {
        path: PathBuf,
        offset: u64,
        message: String,
    },
    /// Well-formed file whose content breaks a semantic rule.
    #[error("{}: {message}", path.display())]
    Validation { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Numerical(#[from] mklcsp_core::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn validation(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit status: 1 usage, 2 data or format, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        use mklcsp_core::Error as E;
        match self {
            Error::Usage(_) => 1,
            Error::Numerical(E::NotPositiveDefinite { .. } | E::Degenerate(_) | E::NonFinite(_)) => 3,
            _ => 2,
        }
    }
}
