//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("degenerate uncertainty: {0}")]
    DegenerateUncertainty(String),

    #[error("learner is not fitted")]
    NotFitted,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid score: {0}")]
    InvalidScore(String),

    #[error("training diverged at epoch {epoch}")]
    DivergedTraining { epoch: usize },

    #[error("missing modality: {0}")]
    MissingModality(String),

    #[error("schema error: missing columns {missing:?}")]
    SchemaError { missing: Vec<String> },

    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("stage {stage} ({modality}): {source}")]
    StageFailure {
        stage: usize,
        modality: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
