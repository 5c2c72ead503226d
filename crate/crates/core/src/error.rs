use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("eigendecomposition of a {dim}x{dim} matrix did not converge")]
    EigenNotConverged { dim: usize },

    #[error("shifted matrix is not positive definite (smallest eigenvalue estimate {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("numerical rank {rank} below required {required}")]
    RankDeficient { rank: usize, required: usize },

    #[error("dof target {target} exceeds spectrum rank {rank}")]
    TargetExceedsRank { target: f64, rank: f64 },

    #[error("root finder failed: {0}")]
    RootFinding(String),

    #[error("large negative risk value {0:e}")]
    NegativeRisk(f64),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures that come from the numerics rather than from the
    /// caller's input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::EigenNotConverged { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::RankDeficient { .. }
                | Error::RootFinding(_)
                | Error::NegativeRisk(_)
        )
    }
}
