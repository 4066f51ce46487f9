use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A Kleene star (or a closure pivot) was requested outside the
    /// convergence domain of its semiring. Usually the grammar is not tight.
    #[error("kleene star does not converge for {value} in the {semiring} semiring")]
    NonConvergent {
        semiring: &'static str,
        value: String,
    },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("I - M is singular")]
    Singular,

    #[error("closure by inversion has a negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },

    #[error("line {line}: duplicate rule {rule}")]
    DuplicateRule { line: usize, rule: String },

    #[error("unknown start symbol {0}")]
    UnknownStartSymbol(String),

    #[error("unknown token {token:?} at position {position}")]
    UnknownToken { position: usize, token: String },

    #[error("yield of length {len} exceeds the enumeration bound {max}")]
    YieldTooLong { len: usize, max: usize },

    #[error("no tight grammar generated after {attempts} attempts")]
    GenerationFailed { attempts: usize },

    #[error("insufficient data for {what}: {reason}")]
    InsufficientData { what: String, reason: String },

    #[error("{operation} is not supported in the {semiring} semiring")]
    Unsupported {
        operation: &'static str,
        semiring: &'static str,
    },
}
