use thiserror::Error;

/// Errors produced by model construction, analysis and simulation.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Parameters make a closed form singular.
    #[error("singular parameters: {0}")]
    Singular(String),

    /// Inputs are individually valid but inconsistent with each other.
    #[error("configuration error: {0}")]
    Config(String),

    /// The brute-force oracle refuses dimensions it cannot enumerate.
    #[error("enumeration limit exceeded: {0}")]
    EnumerationLimit(String),

    /// A chain with no non-optimal level.
    #[error("degenerate chain: {0}")]
    Degenerate(String),

    /// The average convergence rate needs a non-zero initial error.
    #[error("average convergence rate undefined: initial error is zero")]
    UndefinedAcr,

    /// A reconstructed diagonal entry came out negative beyond rounding noise.
    #[error("column {column} off-diagonal mass exceeds one by {excess:e}")]
    NegativeResidue { column: usize, excess: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
