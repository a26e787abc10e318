use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("rank deficient: {0}")]
    Rank(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("{what} did not converge: achieved {achieved:e} after {iterations} iterations")]
    Convergence {
        what: String,
        achieved: f64,
        iterations: usize,
    },

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("unsupported set: {0}")]
    Type(String),

    #[error("certification failed: best duality gap {best_gap:e} after {sweeps} sweeps")]
    Certification { best_gap: f64, sweeps: usize },

    #[error("oracle inconsistency: independent methods disagree by {0:e}")]
    OracleInconsistency(f64),

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn convergence(what: impl Into<String>, achieved: f64, iterations: usize) -> Self {
        Error::Convergence {
            what: what.into(),
            achieved,
            iterations,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Parameter(_) => 2,
            Error::Convergence { .. }
            | Error::Certification { .. }
            | Error::OracleInconsistency(_) => 3,
            _ => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
