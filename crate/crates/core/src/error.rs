use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid set: {0}")]
    InvalidSet(String),

    #[error("invalid function: {0}")]
    InvalidFunction(String),

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("empty grid")]
    EmptyGrid,

    #[error("point is not in the domain: {0}")]
    NotInDomain(String),

    #[error("undefined extended-real sum (+inf) + (-inf)")]
    UndefinedSum,

    #[error("grid budget exceeded: {points} points requested, limit is {limit}")]
    BudgetExceeded { points: f64, limit: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),
}

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
