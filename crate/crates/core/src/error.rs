use std::path::PathBuf;

/// Errors raised by the numerical core and the I/O layer.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular flow map: |det M| = {value:e} at node ({i1}, {i2}, {i3})")]
    SingularMap {
        i1: usize,
        i2: usize,
        i3: usize,
        value: f64,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("four-velocity normalization violated: |g(v,v) + 1| = {0:e}")]
    ConstraintViolation(f64),

    #[error("insufficient tau history: need {needed} slices, have {available}; lengthen the warm-up")]
    InsufficientHistory { needed: usize, available: usize },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("snapshot {path}: {kind}")]
    Snapshot { path: PathBuf, kind: SnapshotError },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("verification failed: {0}")]
    Verification(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SnapshotError {
    #[error("bad magic bytes")]
    BadMagic,
    #[error("file truncated")]
    Truncated,
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("malformed field name")]
    BadName,
    #[error("missing field `{0}`")]
    MissingField(String),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Io(_) | Error::Snapshot { .. } => 2,
            Error::Verification(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
