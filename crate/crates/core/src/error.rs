use std::path::PathBuf;

use thiserror::Error;

use crate::truth::TruthResult;

pub type Result<T, E = CriError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CriError {
    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("task aborted: {0}")]
    TaskAborted(String),

    /// Truth discovery hit its iteration cap. Carries the last iterate.
    #[error("truth discovery did not converge after {} iterations", last.iterations)]
    NonConvergence { last: Box<TruthResult> },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CriError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CriError::Io {
            path: path.into(),
            source,
        }
    }
}
