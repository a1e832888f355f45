use thiserror::Error;

use crate::model::Status;

/// Which side of an enumeration box a feasible point escaped through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoxSide {
    Below,
    Above,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("invalid tolerance: {0}")]
    InvalidTol(&'static str),
    #[error("invalid cone: {0}")]
    InvalidCone(String),
    #[error("invalid block partition: {0}")]
    InvalidBlocks(String),
    #[error("cone has a zero block and therefore no interior")]
    ZeroBlock,
    #[error("interior-point iteration limit reached")]
    IterLimit,
    #[error("branch-and-bound node limit reached (best bound {best_bound})")]
    NodeLimit {
        best_bound: f64,
        incumbent: Option<f64>,
    },
    #[error("right-hand side is not in the feasible set of right-hand sides")]
    OmegaInfeasible,
    #[error("no strong duality: gap {gap} at convergence")]
    NoStrongDuality { gap: f64 },
    #[error("certificate verification failed: F(b) = {value} < {target}")]
    VerificationFailed { value: f64, target: f64 },
    #[error("point is not feasible: {0}")]
    InfeasiblePoint(String),
    #[error("generator is outside the monoid: {0}")]
    NotInMonoid(String),
    #[error("no integer fiber in the box is feasible")]
    EmptyU,
    #[error("box too small: variable {var} has feasible points {side:?} the box")]
    BoxTooSmall { var: usize, side: BoxSide },
    #[error("box too large: {0} lattice points")]
    BoxTooLarge(u128),
    #[error("continuous solve ended with status {0:?}")]
    Solver(Status),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
