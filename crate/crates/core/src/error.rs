use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library layer.
#[derive(Debug, Error)]
pub enum FchError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("blow-up signal at t = {t}: {reason}", t = .0.t_cross, reason = .0.reason)]
    BlowUp(Box<crate::evolution::BlowUpReport>),

    #[error("iteration failed: {0}")]
    IterationFailure(String),

    #[error("no decay fit: {modes} modes above the floor, at least {needed} needed")]
    NoFit { modes: usize, needed: usize },
}

impl FchError {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            FchError::BlowUp(_) | FchError::NonFinite(_) | FchError::IterationFailure(_)
        )
    }
}

pub type Result<T, E = FchError> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> FchError {
    FchError::InvalidArgument(msg.into())
}
