use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("operator is not Hermitian: max |M - M†| = {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("eigenvalue {eigenvalue} outside [{lower}, {upper}]")]
    SpectrumOutOfRange {
        eigenvalue: f64,
        lower: f64,
        upper: f64,
    },

    #[error("operator is not a projector: idempotency residual {residual:e}")]
    NotProjector { residual: f64 },

    #[error("operator is not an effect: {0}")]
    NotEffect(String),

    #[error("effects do not sum to identity: residual {residual:e}")]
    NotComplementary { residual: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsharpness parameter must lie in (0, 1], got {0}")]
    InvalidLambda(f64),

    #[error("unsharpness {0} exceeds 1/sqrt(2); the dilation construction is not guaranteed")]
    LambdaTooLarge(f64),

    #[error("compression needs an even dimension, got {0}")]
    OddDimension(usize),

    #[error("Bloch vector must have unit norm, got norm {0}")]
    InvalidBlochVector(f64),

    #[error("invalid no-signaling box: {0}")]
    InvalidBox(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("self-check `{check}` failed: residual {residual:e}")]
    SelfCheck { check: &'static str, residual: f64 },

    #[error("no convergence after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}
