use thiserror::Error;

/// Errors produced by the lattice engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter failed validation. `field` names the offending input.
    #[error("invalid configuration: {field}: {reason}")]
    Config { field: String, reason: String },

    #[error("dimension mismatch: expected {expected}, got {found} ({what})")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    /// Brute-force enumeration would exceed its path budget.
    #[error("oracle too large: {paths} paths exceeds the cap of {cap}")]
    OracleTooLarge { paths: u128, cap: u128 },

    #[error("no classical solution found ({attempted} seeds attempted)")]
    NoClassicalSolution { attempted: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Output of a substitution system would exceed the materialization cap.
    #[error("projected output length {projected} exceeds the cap of {cap}")]
    OutputTooLarge { projected: u128, cap: u128 },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
