use thiserror::Error;

/// Errors raised by the tensor layer, the material routines and the driver.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("non-positive determinant ({0:e})")]
    NonPositiveDeterminant(f64),

    #[error("tensor is singular")]
    SingularTensor,

    #[error("tensor is not symmetric positive definite (leading minor {0:e})")]
    NotSpd(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid internal state: {0}")]
    InvalidState(String),

    #[error("Euler-backward prefactor {0:e} is not positive; step too large for the plain scheme")]
    DegenerateStep(f64),

    #[error("local solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error(
        "lateral stretch solve failed after {iterations} iterations (residual {residual:e} MPa)"
    )]
    LateralSolveFailure { iterations: usize, residual: f64 },

    #[error("invalid loading program: {0}")]
    InvalidProgram(String),

    #[error("time grid mismatch: {0}")]
    GridMismatch(String),

    #[error("step {step} failed: {source}")]
    StepFailed { step: usize, source: Box<Error> },

    #[error("malformed CSV: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;
