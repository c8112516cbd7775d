use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian: entry ({row}, {col}) deviates by {deviation:e}")]
    NotHermitian { row: usize, col: usize, deviation: f64 },

    #[error("Jacobi diagonalization did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("dimension {dim} exceeds the cap of {cap}")]
    DimensionOverflow { dim: usize, cap: usize },

    #[error("bad dimension: expected {expected}, found {found}")]
    BadDimension { expected: usize, found: usize },

    #[error("unphysical state: {0}")]
    Unphysical(String),

    #[error("argument {value} outside the domain of {function}")]
    DomainError { function: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("transition {0:?} is not one of the labeled transitions (2,4), (1,3), (1,2), (3,4)")]
    BadTransition((usize, usize)),

    #[error("degenerate grid: sum of sin^2 over the grid is {0:e}")]
    DegenerateGrid(f64),

    #[error("inconsistent tomography records: {0}")]
    InconsistentRecords(String),

    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
