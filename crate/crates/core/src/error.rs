use thiserror::Error;

/// Errors raised by the numerical engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid uncertainty set: {0}")]
    InvalidUncertaintySet(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("CFL violation: cfl factor {cfl} must lie in (0, 0.5]")]
    CflViolation { cfl: f64 },

    #[error("non-finite value at {location}")]
    NonFinite { location: String },

    #[error("quadrature did not converge (estimate {estimate}, error {error})")]
    QuadratureNonConvergence { estimate: f64, error: f64 },

    #[error("partition mismatch: {0}")]
    PartitionMismatch(String),

    #[error("control outside the uncertainty set at step {step}")]
    ControlOutsideSet { step: usize },

    #[error("simulation budget exhausted: {requested} steps requested, limit {limit}")]
    BudgetExhausted { requested: u128, limit: u128 },

    #[error("SDE blow-up at step {step}: |X| = {magnitude:e}")]
    BlowUp { step: usize, magnitude: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
