use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("label column `{0}` not found in header")]
    MissingLabelColumn(String),

    #[error("missing value at line {line}, column `{column}`")]
    MissingValue { line: u64, column: String },

    #[error("non-numeric value `{value}` at line {line}, column `{column}`")]
    NonNumeric { line: u64, column: String, value: String },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("subset does not match the subset the model was trained on")]
    SubsetMismatch,

    #[error("autoencoder has not been trained")]
    UntrainedAutoencoder,

    #[error("stop probability is zero at step {step}; reweighting by stop probability divides by it")]
    ZeroStopProbability { step: usize },

    #[error("non-finite training target {0}")]
    NonFiniteTarget(f64),

    #[error("cannot sample from an empty replay memory")]
    EmptyMemory,

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
