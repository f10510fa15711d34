use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CdareError {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: String,
        found: String,
    },

    #[error("{name} is not Hermitian (deviation {deviation:e})")]
    NotHermitian { name: &'static str, deviation: f64 },

    #[error("{name} singular (reciprocal condition {rcond:e})")]
    Singular { name: &'static str, rcond: f64 },

    /// `R_X = R + Bᴴ X̄ B` is numerically singular.
    #[error("X outside dom(R): R_X reciprocal condition {rcond:e}")]
    OutsideDomain { rcond: f64 },

    /// A hypothesis of an operation does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid argument: {0}")]
    Argument(String),
}

pub type Result<T> = std::result::Result<T, CdareError>;
