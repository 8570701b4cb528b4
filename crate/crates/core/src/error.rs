use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported combination: {cell}")]
    UnsupportedCombination { cell: String },

    /// The own-class and other-class prototype coincide, so there is no
    /// decision boundary between them.
    #[error("degenerate decision boundary: prototypes coincide")]
    DegenerateBoundary,

    #[error("point lies outside the unit box at coordinate {index} (value {value})")]
    DomainViolation { index: usize, value: f64 },

    #[error("feasible set is empty")]
    Infeasible,

    #[error("iteration limit of {limit} reached")]
    IterationLimit { limit: usize },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("schema mismatch: {0}")]
    SchemaVersionMismatch(String),

    #[error("block {block} is off its sphere by {deviation:e}")]
    NotOnSphere { block: usize, deviation: f64 },

    #[error("negative entry at index {index}")]
    NegativeEntry { index: usize },

    #[error("class {class} has {available} samples but {requested} prototypes were requested")]
    ClassTooSmall {
        class: usize,
        available: usize,
        requested: usize,
    },

    #[error("class {0} has no samples")]
    EmptyClass(usize),

    #[error("dimension {0} is too large for the grid oracle (max 4)")]
    DimensionTooLarge(usize),

    #[error("unsupported block shape: {0}")]
    UnsupportedBlockShape(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("malformed data: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn unsupported(cell: impl Into<String>) -> Self {
        Error::UnsupportedCombination { cell: cell.into() }
    }
}
