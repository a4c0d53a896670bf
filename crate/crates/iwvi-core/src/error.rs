use alloc::string::String;
use core::fmt;

/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument fell outside the mathematical domain of an operation.
    Domain(String),
    /// Vector/matrix shapes do not agree.
    DimensionMismatch { expected: usize, got: usize },
    /// All importance weights vanished; estimators are undefined.
    DegenerateWeights,
    /// A problem exceeded an explicit budget (e.g. 2^n enumeration).
    BudgetExceeded { limit: usize, requested: usize },
    /// A numerical routine failed to converge or hit a non-finite value.
    Numerical(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::DegenerateWeights => write!(f, "all importance weights are zero"),
            Error::BudgetExceeded { limit, requested } => {
                write!(f, "budget exceeded: requested {requested}, limit {limit}")
            }
            Error::Numerical(msg) => write!(f, "numerical error: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
