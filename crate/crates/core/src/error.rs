use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("slot capacity exceeded: need {needed} slots, ciphertext holds {available}")]
    Capacity { needed: usize, available: usize },

    #[error("segment length mismatch: {left} vs {right}")]
    SegmentMismatch { left: usize, right: usize },

    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
