//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("zero valid articles in {0}")]
    NoValidArticles(String),

    #[error("vocabulary is empty after document-frequency filtering")]
    EmptyVocabulary,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("corpus has {have} documents, need at least {need}")]
    TooFewDocuments { have: usize, need: usize },

    #[error("topic index {index} out of range for {num_topics} topics")]
    TopicIndexOutOfRange { index: usize, num_topics: usize },

    #[error("held-out corpus is empty")]
    EmptyHeldOut,

    #[error("{have} profiles cannot be split into {need} clusters")]
    TooFewProfiles { have: usize, need: usize },

    #[error("standardization requires at least 2 users, got {0}")]
    TooFewUsers(usize),

    #[error("vector has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no article carries section {0:?}")]
    UnknownSection(String),

    #[error("cannot reach {need} non-empty clusters: no remaining cluster is splittable")]
    UnsplittableClusters { need: usize },

    #[error("reward must be finite and non-negative, got {0}")]
    InvalidReward(f64),

    #[error("item pool is empty")]
    EmptyPool,

    #[error("sweep grid is empty")]
    EmptyGrid,

    #[error("A/B variants must include the random baseline")]
    MissingRandomBaseline,

    #[error("unsatisfied-segment detection requires at least 2 segments, got {0}")]
    TooFewSegments(usize),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
