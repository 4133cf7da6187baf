use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("correlation parameter |alpha| = {0} must be below 1")]
    AlphaOutOfRange(f64),

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("matrix is not Hermitian (defect {0:e})")]
    NotHermitian(f64),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate draw: {0}")]
    Degenerate(String),

    #[error("infeasible alignment: {0}")]
    Infeasible(String),

    #[error("eigenvalue gap {gap:e} is below the 1e-6 threshold")]
    EigenvalueGap { gap: f64 },

    #[error("direct and projected SINR forms disagree: relative difference {0:e}")]
    OracleMismatch(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
