use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the solver library and the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: expected n = {expected}, found n = {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error(
        "constraint violated at {count} point(s); worst point {worst_point:?} \
         with |J^2+id| = {square:.3e}, |J^t g J - g| = {metric:.3e} (tol {tol:.1e})"
    )]
    ConstraintViolation {
        count: usize,
        worst_point: [usize; 4],
        square: f64,
        metric: f64,
        tol: f64,
    },

    #[error("direction is not tangent: worst residual {residual:.3e} at {worst_point:?}")]
    NotTangent { worst_point: [usize; 4], residual: f64 },

    #[error("retraction step too large: |tS| = {norm:.3e} at {worst_point:?} (limit 0.5)")]
    StepTooLarge { worst_point: [usize; 4], norm: f64 },

    #[error(
        "degenerate polar projection at {worst_point:?}: smallest eigenvalue of -A^2 is \
         {min_eigenvalue:.3e} (< {sigma_min:.1e})"
    )]
    DegenerateProjection {
        worst_point: [usize; 4],
        min_eigenvalue: f64,
        sigma_min: f64,
    },

    #[error("glue precondition failed: {0}")]
    GluePrecondition(String),

    #[error(
        "glue failure: annulus projection degenerate at {worst_point:?}, |A^2 + id| = {defect:.3e}"
    )]
    GlueFailure { worst_point: [usize; 4], defect: f64 },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("empty test battery")]
    EmptyTestBattery,

    #[error("unrealizable sphere map: {0}")]
    UnrealizableSeed(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("snapshot format error: {0}")]
    Format(String),

    #[error("config error at line {line}: key `{key}`: {message}")]
    Config {
        line: usize,
        key: String,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
