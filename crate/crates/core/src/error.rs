use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Parameter or configuration outside its allowed domain.
    #[error("configuration error: {0}")]
    Config(String),

    /// Buffers that cannot be combined (sample-rate or length mismatch).
    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("crop error: requested {size}x{size} window from {height}x{width} grid")]
    Crop {
        size: usize,
        height: usize,
        width: usize,
    },

    #[error("normalization stats error: {0}")]
    Stats(String),

    /// A dataset record whose grid file is missing or unreadable.
    #[error("integrity error in record {id}: {reason}")]
    Integrity { id: String, reason: String },

    #[error("architecture error at {layer}: {reason}")]
    Architecture { layer: &'static str, reason: String },

    #[error("contract error: {0}")]
    Contract(String),

    #[error("training diverged at epoch {epoch}, batch {batch}: loss = {loss}")]
    Training { epoch: usize, batch: usize, loss: f64 },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    /// Bad magic, version or header layout in one of the binary formats.
    #[error("format error: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
