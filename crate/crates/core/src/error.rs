use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which factor matrix a row solve belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Context,
    Object,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Context => f.write_str("context"),
            Side::Object => f.write_str("object"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("context {context} has {count} interactions; at least 3 are needed to split")]
    SmallContext { context: u32, count: usize },

    #[error("context {context} has no positive interactions (division by zero in target construction)")]
    ZeroDegree { context: u32 },

    #[error("score vector contains a non-finite value at index {index}")]
    InvalidScore { index: usize },

    #[error("sampled object {object} has proposal probability {probability}")]
    InvalidProposal { object: u32, probability: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error(
        "{side} row {row}: system matrix has smallest eigenvalue below {floor:e}; \
         use a smaller interaction coefficient (V or beta) or a larger lambda"
    )]
    NotPositiveDefinite { side: Side, row: usize, floor: f64 },

    #[error(
        "coupled object-side system has smallest eigenvalue below {floor:e}; \
         use a smaller interaction coefficient (V or beta) or a larger lambda"
    )]
    CoupledNotPositiveDefinite { floor: f64 },

    #[error("matrix is singular even after jitter: {0}")]
    Singular(String),

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("every candidate item is excluded")]
    EmptyCandidates,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid bound input: {0}")]
    InvalidBoundInput(String),
}

impl Error {
    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
