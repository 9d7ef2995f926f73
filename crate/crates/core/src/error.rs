use thiserror::Error;

/// Errors raised by the evaluation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain where an operation is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// A structural parameter (ordering, range, index) is invalid.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// The evaluation parameters violate a hypothesis needed for the bounds.
    #[error("validation failed: {0}")]
    Validation(String),
    /// A coefficient table is too small for the requested order.
    #[error("coefficient table holds orders up to {available}, {requested} requested")]
    Table { requested: usize, available: usize },
    /// An internal self-check did not hold.
    #[error("internal consistency error: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
