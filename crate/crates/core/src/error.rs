//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input data: dimension mismatches, non-numeric cells,
    /// labels out of range, NaN/Inf entries.
    #[error("format error: {0}")]
    Format(String),

    /// Parameter outside its documented domain.
    #[error("parameter error: {0}")]
    Param(String),

    /// Matrix shape disagreement in a numeric operation.
    #[error("shape error: {0}")]
    Shape(String),

    /// Training diverged (non-finite loss).
    #[error("training diverged at epoch {epoch}: {message}")]
    Training { epoch: usize, message: String },

    /// Operation requires a connected graph.
    #[error("connectivity error: {0}")]
    Connectivity(String),

    /// Degenerate numeric input (e.g. zero-variance matrix).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Pearson correlation of a constant vector.
    #[error("correlation undefined: {0}")]
    CorrelationUndefined(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<std::path::PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
