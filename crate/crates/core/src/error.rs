use thiserror::Error;

/// Errors produced by the explanation toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid ranker output: {0}")]
    InvalidRankerOutput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty corpus statistics")]
    EmptyCorpus,

    #[error("no valid training pair (need a query group with differing relevances)")]
    NoValidPair,

    #[error("external ranker timed out after {0:?}")]
    ExternalTimeout(std::time::Duration),

    #[error("external ranker returned a malformed response: {0}")]
    MalformedResponse(String),

    #[error("external ranker returned {actual} scores for {expected} documents")]
    ScoreCountMismatch { expected: usize, actual: usize },

    #[error("external ranker I/O failure: {0}")]
    ExternalIo(#[from] std::io::Error),

    #[error("covariance factorization failed after jitter")]
    Factorization,

    #[error("score-based relevance needs a positive top score (got {0}); use a non-negative-score ranker")]
    NonPositiveTopScore(f64),

    #[error("cannot normalize an all-zero weight vector")]
    AllZeroWeights,

    #[error("requested {requested} features but the space only has {available}")]
    TooManyFeatures { requested: usize, available: usize },

    #[error("exhaustive selection supports at most {limit} features (got {actual}); use greedy selection")]
    EnumerationBound { limit: usize, actual: usize },

    #[error("perturbation sample {index} failed: {source}")]
    Sample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty dataset")]
    EmptyDataset,
}

pub type Result<T> = std::result::Result<T, Error>;
