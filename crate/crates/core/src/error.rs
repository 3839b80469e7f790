use alloc::string::String;
use alloc::vec::Vec;

use crate::circuit::Diagnostic;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("dimension {requested} exceeds the configured maximum {max}")]
    DimensionOverflow { requested: usize, max: usize },
    #[error("invalid circuit ({} problem(s))", .0.len())]
    InvalidCircuit(Vec<Diagnostic>),
    #[error("unknown wire `{0}`")]
    UnknownWire(String),
    #[error("invalid bubble: {0}")]
    InvalidBubble(String),
    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("algebra is not commutative (deviation {0:e})")]
    NotCommutative(f64),
    #[error("invalid projective decomposition: {0}")]
    InvalidDecomposition(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("history space of {size} entries exceeds the cap {cap}")]
    CapExceeded { size: usize, cap: usize },
    #[error("conditioning event has probability {0:e}")]
    ZeroProbabilityCondition(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("scenario role error: {0}")]
    Role(String),
    #[error("declared causal constraint violated: {0}")]
    ConstraintViolated(String),
    #[error("numeric defect: {0}")]
    NumericDefect(String),
}

impl Error {
    /// True when the failure is a numerical defect rather than bad input.
    pub fn is_numeric_defect(&self) -> bool {
        matches!(self, Error::NumericDefect(_) | Error::NotCommutative(_))
    }
}
