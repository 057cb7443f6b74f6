use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("corrupt input: {0}")]
    CorruptInput(String),

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("pixel at ({x}, {y}) is not a member of the palette")]
    PaletteMismatch { x: u32, y: u32 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("image too small: {width}x{height}, need at least {min_width}x{min_height}")]
    TooSmall {
        width: u32,
        height: u32,
        min_width: u32,
        min_height: u32,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("division by zero: {0}")]
    DivideByZero(&'static str),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("ambiguous name {name:?}, candidates: {}", candidates.join(", "))]
    AmbiguousName {
        name: String,
        candidates: Vec<String>,
    },

    #[error("upscaler backend failed: {0}")]
    BackendFailure(String),

    #[error("storage error at {path}: {source}")]
    StorageError {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("dataset {0} contains no PNG images")]
    EmptyDataset(PathBuf),
}

impl Error {
    pub(crate) fn storage(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::StorageError {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line tool: 1 usage, 2 data, 3 backend.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) => 1,
            Error::BackendFailure(_) => 3,
            _ => 2,
        }
    }
}
