use thiserror::Error;

/// Errors raised by the kernel, measure, sampling and transform routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {point} lies outside the domain of the {kernel} kernel")]
    Domain { kernel: String, point: f64 },

    #[error("elements are built on different kernels ({0} vs {1})")]
    KernelMismatch(String, String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("row {0} of the system has zero norm")]
    ZeroRow(usize),

    #[error("matrix is not an isometry: |U^T U - I| = {0:e}")]
    NotIsometry(f64),

    #[error("matrix is not positive definite: smallest eigenvalue {min:e} (largest {max:e})")]
    NotPd { min: f64, max: f64 },

    #[error("bad time grid: {0}")]
    BadGrid(String),

    #[error("time {0} is not on the simulation grid")]
    OffGrid(f64),

    #[error("unknown point label {0:?}")]
    UnknownPoint(String),

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("bad partition: {0}")]
    BadPartition(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("time ordering violated: need 0 <= s < t, got s = {s}, t = {t}")]
    Order { s: f64, t: f64 },

    #[error("functional is not adapted to time {0}")]
    Adaptedness(f64),

    #[error("integer overflow computing {0}")]
    Overflow(String),

    #[error("unsupported functional: {0}")]
    UnsupportedFunctional(String),

    #[error("functional cannot be evaluated on this ensemble: {0}")]
    NonEvaluable(String),

    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
