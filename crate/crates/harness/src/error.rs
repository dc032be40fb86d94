use std::path::PathBuf;

use thiserror::Error;

/// Harness-level failures: library errors plus I/O, parsing, and config
/// problems specific to the CLI layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] stringgp::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{path}:{line}: {message}")]
    ParseRow {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("unknown name: {0}")]
    UnknownName(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
