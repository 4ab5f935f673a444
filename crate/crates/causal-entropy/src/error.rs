//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by domain construction, table operations, and solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// A domain, table, or constraint was built from inconsistent parts.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A variable name does not exist in the domain it was used against.
    #[error("unknown variable: {0}")]
    UnknownVariable(String),

    /// An operation that requires a nonempty relation received an empty one.
    #[error("empty relation")]
    EmptyRelation,

    /// An observation fell outside the relation it is supposed to respect.
    /// Under a uniform-over-options prior this is a modeling contradiction,
    /// not a zero-likelihood event.
    #[error("observation outside the relation: {0}")]
    ObservationOutsideRelation(String),

    /// An enumeration would exceed the configured size cap.
    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    /// A fat-pen grid left a column or row empty at the requested resolution.
    #[error("resolution too coarse: {0}")]
    Resolution(String),

    /// A nonpositive derivative or other out-of-range numeric input.
    #[error("numeric domain error: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
