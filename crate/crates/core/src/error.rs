use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("supremand `{name}` is not differentiable at this jet: {reason}")]
    NonDifferentiable { name: String, reason: String },

    #[error("shift violation: M + H = {value} <= 0 at node {node}")]
    ShiftViolation { node: usize, value: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid boundary data: {0}")]
    InvalidBoundary(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cannot parse `{input}`: {reason}")]
    Parse { input: String, reason: String },

    #[error("degenerate interval [{a}, {b}]")]
    DegenerateInterval { a: f64, b: f64 },

    #[error("difference stencil leaves the grid for step multiples {steps:?}")]
    StencilOutOfDomain { steps: Vec<usize> },

    #[error("level {level} is below the reachable range (minimum {minimum})")]
    BelowReachableRange { level: f64, minimum: f64 },

    #[error("profile is unbounded on the sampling box: {0}")]
    Unbounded(String),

    #[error("shooting failed after {switches} switches, best endpoint residual {best_residual:e}")]
    ShootingFailed { switches: usize, best_residual: f64 },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
