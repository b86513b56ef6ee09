use thiserror::Error;

/// Failure modes shared by every stage of the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller passed an argument outside the operation's contract.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// A contour violates a geometric constraint (self-intersection,
    /// leaving the domain, too few nodes).
    #[error("geometry error: {0}")]
    Geometry(String),
    /// A linear solve or iteration failed or became unreliable.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// Reading or writing an artifact failed.
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn argument(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}

pub(crate) fn geometry(msg: impl Into<String>) -> Error {
    Error::Geometry(msg.into())
}

pub(crate) fn numerical(msg: impl Into<String>) -> Error {
    Error::Numerical(msg.into())
}
