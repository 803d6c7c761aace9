use thiserror::Error;

/// Errors raised by the simulator, the oracle and the analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("unknown vertex {0}")]
    UnknownVertex(i64),

    #[error("invalid interaction set: {0}")]
    InvalidInteraction(String),

    #[error("weighted index is empty")]
    EmptyIndex,

    #[error("cannot choose {requested} vertices out of {available}")]
    InsufficientVertices { available: usize, requested: usize },

    #[error("state has {vertices} vertices, enumeration cap is {cap}")]
    TooLargeToEnumerate { vertices: usize, cap: usize },

    #[error("sequence undefined for alpha = {0} (requires 0 <= alpha < 1)")]
    DegenerateSequence(f64),

    #[error("no history for vertex {label} at step {n}")]
    MissingHistory { label: i64, n: u64 },

    #[error("vertex {label} has weight {weight} at step {n}; need at least 2")]
    DegenerateWeight { label: i64, n: u64, weight: u64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("snapshot: {0}")]
    Snapshot(String),
}

pub type Result<T> = std::result::Result<T, Error>;
