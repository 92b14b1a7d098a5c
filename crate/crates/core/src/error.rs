use thiserror::Error;

pub type Result<T, E = NegotiationError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum NegotiationError {
    /// Malformed input: arity mismatches, illegal values, bad traces.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("outcome space of {size} bids exceeds the cap of {cap}")]
    Capacity { size: u128, cap: usize },

    #[error("protocol violation by agent {agent}: {reason}")]
    ProtocolViolation { agent: usize, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl NegotiationError {
    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        NegotiationError::Structural(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        NegotiationError::Config(msg.into())
    }
}
