use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A model or run parameter is outside its allowed range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// User supplied data (tables, files) that cannot be used.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A caller broke an API precondition (mismatched lengths, non-Hermitian matrix, ...).
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// The frequency grid is too coarse for the requested time window.
    #[error(
        "aliasing guard: frequency spacing {spacing} cannot resolve |u| up to {max_time} \
         (need spacing * |u|max < 1/2)"
    )]
    Aliasing { spacing: f64, max_time: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Beat-note analysis found no oscillation in the intensity.
    #[error("no oscillation detected in waveform intensity")]
    NoOscillation,

    #[error("{path}: line {line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag for the error category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::InvalidInput(_) => "invalid-input",
            Error::ContractViolation(_) => "contract-violation",
            Error::Aliasing { .. } => "aliasing-guard",
            Error::Numerical(_) => "numerical",
            Error::NoOscillation => "no-oscillation",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// True for failures caused by numerical accuracy limits rather than bad input.
    pub fn is_accuracy_guard(&self) -> bool {
        matches!(self, Error::Aliasing { .. } | Error::Numerical(_))
    }
}

pub(crate) fn invalid_parameter(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn invalid_input(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::ContractViolation(msg.into())
}
