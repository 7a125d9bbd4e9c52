use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the lab. Input validation failures carry the offending
/// field so that config errors can be reported at field level.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid input `{field}`: {reason}")]
    InvalidInput { field: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    Mismatch(String),

    #[error("density is negative: 1 + f reaches {min:.3e} at x = {at:.6}")]
    NegativeDensity { min: f64, at: f64 },

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error on {path}: {reason}")]
    Serde { path: PathBuf, reason: String },
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> LabError {
    LabError::InvalidInput {
        field,
        reason: reason.into(),
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> LabError {
    let path = path.into();
    move |source| LabError::Io { path, source }
}
