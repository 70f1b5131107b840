//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building models, running the
/// oracle, or parsing files.
#[derive(Debug, Error)]
pub enum Error {
    #[error("reversed bounds for '{name}': {lower} > {upper}")]
    ReversedBounds {
        name: String,
        lower: f64,
        upper: f64,
    },

    #[error("binary variable '{name}' needs bounds within [0, 1], got [{lower}, {upper}]")]
    BinaryBounds {
        name: String,
        lower: f64,
        upper: f64,
    },

    #[error("duplicate variable name '{0}'")]
    DuplicateName(String),

    #[error("unknown variable id {0}")]
    UnknownVariable(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("variable '{0}' must be continuous")]
    NotContinuous(String),

    #[error("variable '{0}' must be binary")]
    NotBinary(String),

    #[error("variable '{0}' must have finite bounds")]
    InfiniteBounds(String),

    #[error("term must reference at least one variable")]
    EmptyTerm,

    #[error("variable repeated within a term")]
    DuplicateTermVariable,

    #[error("operation requires a term without binary variables")]
    UnexpectedBinaries,

    #[error("size guard: {got} exceeds the limit of {limit}")]
    SizeGuard { limit: usize, got: usize },

    #[error("need at least {needed} continuous factors, got {got}")]
    TooFewFactors { needed: usize, got: usize },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("cannot emit a table from an empty row set")]
    EmptyReport,

    #[error("membership test needs a nonempty vertex list")]
    EmptyVertexSet,

    #[error("MPS parse error at line {line}: {message}")]
    MpsParse { line: usize, message: String },

    #[error("name '{0}' collides with another name after sanitization")]
    NameCollision(String),

    #[error("instance JSON: {0}")]
    InstanceJson(String),

    #[error("point violates the formulation rows: {0}")]
    InfeasiblePoint(String),

    #[error("decomposition produced a point outside its disjunct: {0}")]
    DecompositionFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
