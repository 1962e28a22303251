use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("size error: {0}")]
    Size(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("series kind error: {0}")]
    Kind(String),

    #[error("model validity error: {0}")]
    Validity(String),

    #[error("nonstationary model: {0}")]
    Nonstationary(String),

    #[error("covariance not positive definite (failing pivot {pivot})")]
    Conditioning { pivot: usize },

    #[error("nonpositive model spectrum at omega = {omega}")]
    NonpositiveSpectrum { omega: f64 },

    #[error("initialization failed: {0}")]
    Init(String),

    #[error("nested fits inconsistent: W = {0}")]
    Nesting(f64),

    #[error("fits are not comparable: {0}")]
    Comparability(String),

    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
