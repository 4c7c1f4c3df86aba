use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// A size parameter exceeds what the operation supports.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// An argument lies outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A 1-based index is outside its valid range.
    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    /// Two inputs disagree on their dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A precondition of a lemma or construction does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A netlist could not be parsed or validated.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A computed quantity broke a guaranteed bound. Always a bug.
    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
