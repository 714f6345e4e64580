use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite score at flat index {index}")]
    NonFiniteScore { index: usize },

    #[error("cell {0:?} lies outside the grid")]
    OutOfBounds((u32, u32, u32)),

    #[error("invalid time split: {0}")]
    InvalidSplit(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("no positive labels")]
    NoPositives,

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("burned area must be positive, got {0}")]
    InvalidArea(f64),

    #[error("no candidates to choose from")]
    NoCandidates,

    #[error("fraction must lie in (0, 1], got {0}")]
    InvalidFraction(f64),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("shape error: {0}")]
    ShapeError(String),

    #[error("training data holds a single class; only the constant prior can be fit")]
    SingleClassData,

    #[error("empty input")]
    EmptyInput,

    #[error("invalid scene config: {0}")]
    InvalidSceneConfig(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("bad magic in {path}: expected FGR1")]
    BadMagic { path: PathBuf },

    #[error("truncated payload in {path}: expected {expected} bytes, found {found}")]
    TruncatedPayload { path: PathBuf, expected: u64, found: u64 },

    #[error("unsupported dtype code {0}")]
    UnsupportedDtype(u8),

    #[error("config error: {0}")]
    Config(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code used by the command-line tool.
    ///
    /// 1 = usage error, 2 = contract violation, 3 = data error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Config(_) => 1,
            Error::ContractViolation(_) => 2,
            _ => 3,
        }
    }
}
