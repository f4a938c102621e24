use thiserror::Error;

/// Errors produced by the library operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("{what} requires {required} units of work, budget is {budget}")]
    Budget {
        what: &'static str,
        required: u128,
        budget: u128,
    },

    #[error("cannot parse polynomial at token `{token}`: {message}")]
    Parse { token: String, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("quadrature did not converge; worst cell {cell:?} with discrepancy {discrepancy:e}")]
    Quadrature { cell: Vec<u64>, discrepancy: f64 },
}

impl Error {
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::Budget { .. })
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
