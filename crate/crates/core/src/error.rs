use thiserror::Error;

use crate::hybrid::HybridTime;

/// Errors raised by the regulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The flow produced a non-finite state.
    #[error("integration blow-up at t = {}, j = {}: {detail}", .at.t, .at.j)]
    IntegrationBlowup { at: HybridTime, detail: String },

    /// Lie derivatives of the triangular reference requested on its non-smooth set.
    #[error("evaluation at the branch point of the reference (|w2|/|w| = {ratio:e})")]
    BranchPoint { ratio: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed config: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid_input(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn invalid_config(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}
