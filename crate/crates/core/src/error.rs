use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("projection binding mismatch: {0}")]
    Binding(String),

    #[error("statistic is undefined for an empty sketch")]
    EmptySketch,

    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("generation failed: {0}")]
    Generation(String),

    /// `L(t') - U(t) <= 0` at some grid level, so the threshold test there
    /// cannot separate the two regimes.
    #[error(
        "threshold grid unsound at level r={level} (t={t}, t'={t_next}): \
         gap L(t') - U(t) = {gap:.6e} <= 0"
    )]
    GridUnsound {
        level: usize,
        t: u64,
        t_next: u64,
        gap: f64,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn format(offset: u64, msg: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: msg.into(),
        }
    }
}
