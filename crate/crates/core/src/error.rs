//! Error type shared by every module of the crate.

use thiserror::Error;

use crate::functional::Curve;

pub type Result<T> = std::result::Result<T, FsacfError>;

#[derive(Debug, Error)]
pub enum FsacfError {
    /// Two curves (or a curve and a series) live on different discretizations.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("series too short: need at least {needed} curves, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("nonpositive price {value} in curve {curve} at grid point {point}")]
    NonPositivePrice {
        curve: usize,
        point: usize,
        value: f64,
    },

    /// Weiszfeld iteration ran out of iterations. Carries the last iterate.
    #[error(
        "spatial median did not converge after {iterations} iterations \
         (last relative step {last_step:e}, last objective change {objective_change:e})"
    )]
    MedianNotConverged {
        iterations: usize,
        last_step: f64,
        objective_change: f64,
        last_iterate: Box<Curve>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "singular normal equations (pivot {pivot} at column {column}); try a smaller FPC dimension"
    )]
    Singular { column: usize, pivot: f64 },

    #[error("ill-conditioned eigenvalue inversion: lambda_{index} = {value:e} relative to lambda_1 = {leading:e}")]
    IllConditioned {
        index: usize,
        value: f64,
        leading: f64,
    },

    #[error("degenerate series: {0}")]
    Degenerate(String),

    #[error("malformed CSV at row {row}, column {column}: {message}")]
    Csv {
        row: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
