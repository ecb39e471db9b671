use std::io;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("{path}: no points")]
    NoPoints { path: PathBuf },
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("checkpoint truncated: {0}")]
    Truncated(String),
    #[error("unknown checkpoint version {0}")]
    UnknownVersion(String),
    #[error("malformed checkpoint header: {0}")]
    Header(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] cif_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn io_at(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
