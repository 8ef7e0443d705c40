use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("time index {t} is outside the valid range 0..={max}")]
    TimeIndex { t: usize, max: usize },

    #[error("invalid constant: {0}")]
    InvalidConstant(String),

    #[error("Q is not strictly concave in the action at t={t} (curvature term c+k = {curvature})")]
    NotConcave { t: usize, curvature: f64 },

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("matrix identity check failed: {0}")]
    IdentityCheck(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
}
