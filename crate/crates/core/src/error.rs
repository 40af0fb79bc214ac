use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("distance matrix is not a metric: {0}")]
    NotAMetric(String),

    #[error("oracle queried in the wrong ground-truth mode: expected {expected}, got {got}")]
    WrongMode { expected: &'static str, got: &'static str },

    #[error("item id {0} out of range (n = {1})")]
    ItemOutOfRange(u32, usize),

    #[error("empty input set")]
    EmptySet,

    #[error("interactive oracle aborted: {0}")]
    InteractiveAborted(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
