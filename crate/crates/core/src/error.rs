use alloc::string::String;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),
    /// Vectors or matrices whose lengths do not agree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    /// A model or configuration that violates its invariants.
    #[error("invalid model: {0}")]
    InvalidModel(String),
    /// All observations coincide, so no constraint grid can be built.
    #[error("degenerate sample: all {0} observations are equal")]
    DegenerateSample(usize),
    /// The simplex solver exceeded its pivot budget.
    #[error("simplex pivot budget of {0} exceeded")]
    PivotBudget(usize),
    /// The mixture density vanishes at an observation.
    #[error("mixture density is not positive at observation {index} (x = {x})")]
    ZeroDensity { index: usize, x: f64 },
    /// Test-only oracles with limited reach.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
