//! Error type for the std layer: wraps core errors and adds IO/format
//! failures that only exist once files are involved.
//!
//! `Io` and `Format` describe problems with user-supplied inputs (missing
//! files, unparseable documents); `Persist` marks failures while writing our
//! own outputs, which the CLI reports as internal errors.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] ckn_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("failed to write {path}: {source}")]
    Persist {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format { path: path.into(), message: message.into() }
    }

    pub fn persist(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Persist { path: path.into(), source }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Error::Usage(message.into())
    }

    /// Process exit status for this error: persistence failures are internal
    /// (2), everything else is a problem with the user's input or data (1).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Persist { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
