use thiserror::Error;

/// Errors produced while building or solving a relaxation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),

    #[error("factors mix monomial and Bernstein bases")]
    MixedBasis,

    #[error("operation requires {0} basis factors")]
    WrongBasis(&'static str),

    #[error("expansion needs {needed} terms, over the budget of {budget}")]
    ExpansionBudget { needed: u128, budget: usize },

    #[error("invalid elimination order: {0}")]
    InvalidOrder(String),

    #[error("order is not a perfect elimination ordering at vertex {0}")]
    NotPerfectEliminationOrder(usize),

    #[error("constraint {0} is not covered by any clique")]
    Unassignable(String),

    #[error("relaxation order {order} too small: {reason}")]
    OrderTooSmall { order: usize, reason: String },

    #[error("malformed block SDP: {0}")]
    MalformedSdp(String),

    #[error("external solver failed: {0}")]
    ExternalSolver(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
