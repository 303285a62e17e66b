use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the extraction, caching, training and evaluation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid run configuration or missing inputs the user must supply.
    #[error("config error: {0}")]
    Config(String),
    /// Input data is unusable (no participants, malformed tables, bad labels).
    #[error("data error: {0}")]
    Data(String),
    /// A value is outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The feature cache on disk does not match its manifest.
    #[error("cache corrupt: {0}")]
    CacheCorrupt(String),
    /// Model fitting failed.
    #[error("fit error: {0}")]
    Fit(String),
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the caller's configuration rather than by the data.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
