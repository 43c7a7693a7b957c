use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    /// A text or binary file does not follow its format.
    #[error("{}:{line}: {msg}", path.display())]
    Format { path: PathBuf, line: usize, msg: String },
    #[error(transparent)]
    Core(#[from] pnrsynth_core::Error),
    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub(crate) fn io(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
        move |source| Error::Io { path: path.to_path_buf(), source }
    }

    /// Process exit code: 1 usage, 3 numeric failure, 2 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Core(e) if e.is_numeric() => 3,
            _ => 2,
        }
    }
}

/// Attaches a file path to errors raised while parsing text already read from it.
pub(crate) trait WithPath<T> {
    fn at(self, path: &Path) -> Result<T>;
}

impl<T> WithPath<T> for Result<T, ParseError> {
    fn at(self, path: &Path) -> Result<T> {
        self.map_err(|e| match e {
            ParseError::Line(line, msg) => Error::Format { path: path.to_path_buf(), line, msg },
            ParseError::Core(e) => Error::Core(e),
        })
    }
}

/// Failure while parsing in-memory text; line numbers are 1-based.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {0}: {1}")]
    Line(usize, String),
    #[error(transparent)]
    Core(#[from] pnrsynth_core::Error),
}
