//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("label {label} out of range for {classes} classes")]
    Label { label: usize, classes: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("{params} parameters exceed the dense-Hessian guard of {max}")]
    TooManyParams { params: usize, max: usize },

    #[error("missing checkpoint at step {0}")]
    MissingCheckpoint(usize),

    #[error("update log required but logging was disabled for this run")]
    UpdateLogDisabled,

    #[error("training diverged at step {step} (loss {loss})")]
    Diverged { step: usize, loss: f64 },

    #[error("correlation undefined: {0}")]
    DegenerateCorrelation(String),

    #[error("PRS fit failed for label {label}: {reason}")]
    PrsFit { label: usize, reason: String },

    #[error("enumeration too large: {0}")]
    Enumeration(String),

    #[error("grid: {0}")]
    Grid(String),

    #[error("format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
