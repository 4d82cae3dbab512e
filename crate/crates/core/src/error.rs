use alloc::string::String;

/// Errors produced by the algorithmic core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("corpus has no {0} documents")]
    EmptyClass(&'static str),
    #[error("vocabulary is empty after pruning")]
    EmptyVocabulary,
    #[error("term `{0}` is not in the vocabulary")]
    UnknownTerm(String),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("training diverged: non-finite loss in {stage}")]
    Diverged { stage: String },
    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
