use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("unsupported metric for discrete Hodge")]
    NonDiagonalMetric,
    #[error("degree exceeds dimension")]
    DegreeOverflow,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("cochain mismatch: {0}")]
    CochainMismatch(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("constitutive map not invertible")]
    NotInvertible,
    #[error("solver diverged after {iterations} iterations (residual {residual:.3e})")]
    SolverDiverged { iterations: usize, residual: f64 },
    #[error("model is not linear")]
    NonlinearModel,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed snapshot: {0}")]
    BadSnapshot(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
