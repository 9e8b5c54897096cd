use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulation engines and the analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {field}: {reason}")]
    Config { field: &'static str, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("momentum lattice would exceed the cap of {cap} sites (requested {requested})")]
    GridCap { cap: usize, requested: usize },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("malformed input {path}: line {line}: {reason}")]
    Parse { path: PathBuf, line: usize, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Config {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
