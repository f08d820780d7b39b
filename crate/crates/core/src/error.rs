use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{system} moment system is singular to working precision (mu1 = {mu1}, M = {order})")]
    SingularSystem {
        system: &'static str,
        mu1: f64,
        order: usize,
    },

    /// A line that must be reconstructed has an incomplete vertical chord of
    /// backprojection data.
    #[error("interior problem: {0}")]
    InteriorProblem(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
