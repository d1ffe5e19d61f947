use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("index {index} out of range for length {len}")]
    OutOfRange { index: usize, len: usize },

    #[error("system too large for dense methods: L = {len} exceeds {max}")]
    TooLarge { len: usize, max: usize },

    #[error("gate is not unitary (deviation {0:e})")]
    NonUnitary(f64),

    #[error("bond dimension {needed} at bond {bond} exceeds hard cap {cap}")]
    CapSaturated { bond: usize, needed: usize, cap: usize },

    #[error("did not converge: {0}")]
    NotConverged(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
