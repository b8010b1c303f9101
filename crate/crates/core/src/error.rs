//! Error type shared by every module in the crate.

use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Two operands whose shapes must agree do not.
    #[error("shape mismatch in {context}: {left} vs {right}")]
    ShapeMismatch {
        context: &'static str,
        left: String,
        right: String,
    },

    /// An input is spatially too small for the requested operation.
    #[error("{context}: input is {got_h}x{got_w}, needs at least {min_h}x{min_w}")]
    InputTooSmall {
        context: &'static str,
        got_h: usize,
        got_w: usize,
        min_h: usize,
        min_w: usize,
    },

    /// A parameter is outside its documented range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A non-finite loss or gradient; signals divergence, the operator
    /// should lower the learning rate.
    #[error("non-finite {what}")]
    NonFinite { what: &'static str },

    /// Divergence wrapper carrying the step index of the aborted run.
    #[error("training aborted at step {step}: {source}")]
    TrainingAborted {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("weight file rejected: {0}")]
    WeightFormat(String),

    #[error("manifest line {line}: {reason}")]
    ManifestFormat { line: usize, reason: String },

    #[error("{path}: {reason}")]
    Image { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn image(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Image {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
