use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong between ingesting samples and writing a report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("coordinate {index} = {value} outside [{lower}, {upper}]")]
    BoundsViolation {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unknown objective index {index} (function has {available})")]
    UnknownObjective { index: usize, available: usize },

    #[error("unknown test function `{0}`")]
    UnknownFunction(String),

    #[error("duplicate design points at rows {first} and {second}")]
    DuplicatePoint { first: usize, second: usize },

    #[error("degenerate response: all responses are identical")]
    DegenerateResponse,

    #[error("correlation matrix is ill-conditioned even with nugget {nugget:e}")]
    IllConditioned { nugget: f64 },

    #[error("symmetric eigensolver did not converge after {sweeps} sweeps")]
    EigenNonConvergence { sweeps: usize },

    #[error("degenerate spectrum: all eigenvalues are zero")]
    DegenerateSpectrum,

    #[error("candidate basis exceeds {limit} terms")]
    BasisTooLarge { limit: usize },

    #[error("surrogate fit failed: {0}")]
    FitFailure(String),

    #[error("non-finite surrogate output at {0:?}")]
    Evaluation(Vec<f64>),

    #[error("{path}: row {row}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: rows outside the design space: {rows:?}")]
    RowsOutOfBounds { path: PathBuf, rows: Vec<usize> },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("{0}: no data rows")]
    EmptySet(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 2 = configuration, 3 = data, 4 = numerics.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::InvalidArgument(_)
            | Error::UnknownObjective { .. }
            | Error::UnknownFunction(_)
            | Error::BasisTooLarge { .. }
            | Error::Json(_) => 2,
            Error::BoundsViolation { .. }
            | Error::DimensionMismatch { .. }
            | Error::Domain(_)
            | Error::DuplicatePoint { .. }
            | Error::DegenerateResponse
            | Error::Parse { .. }
            | Error::RowsOutOfBounds { .. }
            | Error::Shape(_)
            | Error::EmptySet(_)
            | Error::Io(_) => 3,
            Error::IllConditioned { .. }
            | Error::EigenNonConvergence { .. }
            | Error::DegenerateSpectrum
            | Error::FitFailure(_)
            | Error::Evaluation(_) => 4,
        }
    }
}
