use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("dimension must be at least 1")]
    ZeroDimension,

    #[error("not a projection: residual {residual:e}")]
    NotProjection { residual: f64 },

    #[error("operator is not positive: min eigenvalue {0:e}")]
    NotPositive(f64),

    #[error("function evaluated outside its domain at spectral value {0}")]
    Domain(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid subalgebra descriptor: {0}")]
    InvalidDescriptor(String),

    #[error("filtration levels are not nested at level {0}")]
    NotNested(usize),

    #[error("bisection did not converge after {steps} steps: bracket [{lo:e}, {hi:e}]")]
    Bisection { steps: usize, lo: f64, hi: f64 },

    #[error("majorant solver stalled: objective {objective:e}, residual {residual:e} after {iterations} Newton steps")]
    SolverStagnation {
        objective: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("fixed-point iteration did not converge after {doublings} doublings (residual {residual:e})")]
    FixedPoint { doublings: usize, residual: f64 },

    #[error("Cuculescu recursion degenerate at lambda = {lambda}: idempotency residual {residual:e}; jitter lambda")]
    Degenerate { lambda: f64, residual: f64 },

    #[error("inequality violated: {0}")]
    Violation(String),

    #[error("invalid word: {0}")]
    Word(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
