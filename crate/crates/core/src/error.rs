use alloc::string::String;
use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid schema: {0}")]
    Schema(String),
    /// A cell violates its column contract.
    #[error("row {row}, column `{column}`: {msg}")]
    Cell { row: usize, column: String, msg: String },
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// Evaluation produced NaN or infinity.
    #[error("non-finite value produced by node {node} ({op})")]
    NonFinite { node: usize, op: &'static str },
    /// Training diverged.
    #[error("non-finite loss at iteration {0}")]
    Divergence(usize),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
}

impl Error {
    /// True for failures caused by floating-point blow-ups rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite { .. } | Error::Divergence(_) | Error::NoConvergence(_))
    }
}

macro_rules! invalid {
    ($($arg:tt)*) => { $crate::error::Error::Invalid(alloc::format!($($arg)*)) };
}
pub(crate) use invalid;
