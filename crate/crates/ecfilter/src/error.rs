use thiserror::Error;

/// Errors across graph construction, spectral routines, and fitting.
///
/// Two broad families matter to callers: validation errors (bad inputs,
/// detected before any heavy computation) and numeric errors (a solver
/// failed on otherwise valid input). [`Error::is_numeric`] distinguishes
/// them so front ends can map exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed edge list at line {line}: {reason}")]
    EdgeList { line: usize, reason: String },

    #[error("self-loop on node {0} is not allowed")]
    SelfLoop(usize),

    #[error("node {0} is isolated; every node needs degree >= 1")]
    IsolatedNode(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("corrected spectrum was not derived from this eigensystem")]
    SourceMismatch,

    #[error("symmetric eigensolver failed to converge")]
    SolverFailure,

    #[error("eigendecomposition violated its contract: {0}")]
    SpectralContract(String),

    #[error("training diverged at iteration {iter} (loss {loss:.3e}); try a lower learning rate")]
    Diverged { iter: usize, loss: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for solver non-convergence or training divergence; false for
    /// validation and I/O failures.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::SolverFailure | Error::SpectralContract(_) | Error::Diverged { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
