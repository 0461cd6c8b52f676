use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid row subset: {0}")]
    InvalidSubset(String),

    #[error("invalid wavelet configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("rMSE undefined: true signal has zero energy")]
    UndefinedMetric,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("ingestion error in {path}: {detail} (byte offset {offset})")]
    Ingestion {
        path: PathBuf,
        offset: u64,
        detail: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
