use thiserror::Error;

/// Errors produced by the discretization, forward solver and inference layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid discretization: {0}")]
    InvalidGrid(String),

    #[error("invalid region layout: {0}")]
    InvalidRegions(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dense assembly of a {size}x{size} matrix exceeds the limit of {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error("point {x} is not admissible: {reason}")]
    InadmissiblePoint { x: f64, reason: &'static str },

    #[error("potential is not admissible: {0}")]
    InvalidPotential(String),

    #[error("{kind} factorization of a {dim}x{dim} matrix failed")]
    Factorization { dim: usize, kind: &'static str },

    #[error("linear solve residual {residual:e} exceeds tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("chain failed at iteration {iteration}: {source}")]
    Chain {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
