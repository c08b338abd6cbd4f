use thiserror::Error;

/// Errors raised by set construction, evaluation and solving.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A set description violates its construction invariants.
    #[error("invalid set: {0}")]
    InvalidSet(String),

    /// A problem instance violates the standing assumptions.
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    /// The operation needs a bounded set but got an unbounded one.
    #[error("unbounded target: {0}")]
    Unbounded(String),

    /// No closed form or exact oracle exists for this combination of kinds.
    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("oracle grid has no feasible point")]
    EmptyGrid,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
