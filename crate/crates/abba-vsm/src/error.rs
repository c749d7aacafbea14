//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Underlying I/O failure, annotated with the path involved.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input or stream contents (bad token, truncated file,
    /// version mismatch, violated record invariants).
    #[error("format error: {0}")]
    Format(String),

    /// A dataset with no usable samples.
    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    /// Input data violating an operation precondition (too short, non-finite).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Parameter outside its admissible range.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// An operation that needs at least one element received none.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// A sample that must carry a class label does not.
    #[error("sample {sample_id} has no label")]
    MissingLabel { sample_id: u64 },

    /// Training data must cover at least two classes.
    #[error("corpus must contain at least two classes ({0})")]
    SingleClassCorpus(String),

    /// A stratified split that would leave a class without train or test samples.
    #[error("split infeasible: {0}")]
    SplitInfeasible(String),

    /// A hyperparameter search space with no configurations.
    #[error("empty search space: {0}")]
    EmptySearchSpace(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
