use thiserror::Error;

use crate::linsolve::SolveStats;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("refinement failed: closure depth exceeded {cap}")]
    RefinementFailure { cap: usize },

    #[error("ill-conditioned basis on element {element}")]
    IllConditionedBasis { element: usize },

    #[error("coefficient is not elliptic at ({x}, {y}): tr A = {trace}")]
    NotElliptic { x: f64, y: f64, trace: f64 },

    #[error("linear solver did not converge after {} iterations (relative residual {:.3e})", .0.iterations, .0.relative_residual)]
    NonConvergence(SolveStats),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
