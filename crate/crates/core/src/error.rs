use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("order parameter s = {0} is positive; only s <= 0 is supported")]
    PositiveOrder(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("Fock truncation at dimension {dim} leaves tail mass {tail:.3e} (limit {limit:.1e})")]
    Truncation { dim: usize, tail: f64, limit: f64 },

    #[error("dimension {requested} exceeds the configured cap {cap}")]
    DimensionOverflow { requested: usize, cap: usize },

    #[error("eigen-solver failed: {0}")]
    EigenSolver(String),

    #[error("numerical non-convergence: {0}")]
    NonConvergence(String),

    #[error("state spec error: {0}")]
    Spec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
