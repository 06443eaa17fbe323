use thiserror::Error;

pub type Result<T> = std::result::Result<T, FracError>;

#[derive(Debug, Error)]
pub enum FracError {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("kernel is singular on the diagonal r = rho = {0}")]
    Singularity(f64),

    /// Invalid grid, quadrature or run configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Objects combined that do not belong together (e.g. profiles on different grids).
    #[error("usage error: {0}")]
    Usage(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("linear system could not be factored: {0}")]
    Factorization(String),

    /// A checkable property failed on a computed result.
    #[error("verification failure in {check}: measured {measured:e}, tolerance {tolerance:e}")]
    Verification {
        check: String,
        measured: f64,
        tolerance: f64,
    },

    #[error("internal consistency failure: {0}")]
    InternalConsistency(String),

    #[error("cache error: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl FracError {
    /// Process exit status used by the CLI for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            FracError::Verification { .. } | FracError::InternalConsistency(_) => 1,
            _ => 2,
        }
    }
}
