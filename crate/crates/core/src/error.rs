use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed pool file: {0}")]
    Format(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("row {row} has zero norm and cannot be normalized")]
    ZeroNorm { row: usize },

    #[error("row {row} contains a non-finite value")]
    NonFinite { row: usize },

    #[error("row {row} is not unit-norm (norm {norm})")]
    NotNormalized { row: usize, norm: f64 },

    #[error("budget {b} out of range for a pool of {n} items")]
    Budget { b: usize, n: usize },

    #[error("budget B = 1 leaves the regularizer's neighbour sum empty; use at least 2 parameters or --regularizer none_s1")]
    DegenerateBudget,

    #[error("invalid selection: {0}")]
    InvalidSelection(String),

    #[error("instance too large for the exact solver: N = {n} exceeds cap {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("report serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// Process exit code: 1 for I/O failures, 2 for everything the caller
    /// could have avoided by passing different input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 1,
            _ => 2,
        }
    }
}
