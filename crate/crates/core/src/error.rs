use thiserror::Error;

/// Errors produced by the allocation and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible power budget: {0}")]
    InfeasibleBudget(String),

    #[error("no RF chain carries a nonzero desired-signal variance")]
    NoActiveChains,

    #[error("iteration did not converge after {0} iterations")]
    NotConverged(usize),

    #[error("rank-deficient least-squares design: {0}")]
    RankDeficient(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
