use thiserror::Error;

use crate::optim::LpError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at {path}: {msg}")]
    Parse { path: String, msg: String },

    #[error("invalid model: {0}")]
    Invalid(String),

    #[error(
        "state {state}, action `{action}`: zero lower bound on successor {succ} \
         (interval lower bounds must be strictly positive)"
    )]
    ZeroLowerBound {
        state: usize,
        action: String,
        succ: usize,
    },

    #[error("dead end: goal is avoidable with positive probability from states {0:?}")]
    DeadEnd(Vec<usize>),

    #[error("observation mismatch: {0}")]
    ObservationMismatch(String),

    #[error("policy undefined at reachable state {0}")]
    UndefinedPolicy(usize),

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("value iteration did not converge within {0} iterations")]
    NonConvergence(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Lp(#[from] LpError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}

pub(crate) fn arg(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
