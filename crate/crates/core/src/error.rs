//! Error type shared across the crate.

use std::io;
use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors produced by dataset loading, training, and inference.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// File or OS-level I/O failure.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    /// Malformed input data: bad CSV structure, unparsable cells, invalid labels.
    /// The message carries the row/column location.
    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },

    /// An argument violates a documented precondition (bad dimensions,
    /// out-of-range index, empty grid, invalid hyperparameter).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A model file that cannot be decoded.
    #[error("model file {path}: {message}")]
    ModelFormat { path: PathBuf, message: String },

    /// A model file written with an unsupported format version.
    #[error("model file version {found} is not supported (this build reads version {supported})")]
    ModelVersion { found: u32, supported: u32 },

    /// Training cannot proceed on the given data.
    #[error("training: {0}")]
    Training(String),

    /// Prediction-time failure (missing score cache, undefined indicator).
    #[error("inference: {0}")]
    Inference(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn data(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Data { path: path.into(), message: message.into() }
    }
}
