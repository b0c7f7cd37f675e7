use std::io;
use std::path::PathBuf;

/// Process exit status for usage and validation failures.
pub const EXIT_USAGE: i32 = 2;
/// Process exit status for numerical failures (non-finite values, divergence).
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },
    #[error("unsupported version {found} (this build reads version {supported})")]
    Version { found: u32, supported: u32 },
    #[error("file truncated: needed {needed} more bytes at offset {offset}")]
    Truncated { needed: usize, offset: usize },
    #[error("{0}")]
    Invalid(String),
    #[error("{0} unexpected trailing bytes")]
    Trailing(usize),
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] invertkit_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Format { path: PathBuf, source: FormatError },
    #[error("{}: {message}", path.display())]
    Image { path: PathBuf, message: String },
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Core(
                invertkit_core::Error::Numerical { .. } | invertkit_core::Error::Diverged { .. },
            ) => EXIT_NUMERICAL,
            _ => EXIT_USAGE,
        }
    }
}
