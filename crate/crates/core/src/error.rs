use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A shape description violates one of its structural invariants.
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    /// The grid spacing cannot resolve the smallest feature of a shape.
    #[error("under-resolved: {0}")]
    UnderResolved(String),

    /// An operation precondition does not hold for the given inputs.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The requested quantity is undefined in this parameter regime
    /// (e.g. the absolute homogeneous capacity for p >= N >= 2).
    #[error("unsupported regime: {0}")]
    Unsupported(String),

    /// A variational solve stopped before reaching its tolerance.
    #[error("solver did not converge: residual {residual:e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },

    /// A geometric input is degenerate (zero gap, infinite inradius, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The variational search produced internally inconsistent data.
    #[error("internal consistency: {0}")]
    Inconsistency(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
