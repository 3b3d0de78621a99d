use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The call itself is malformed: wrong lengths, mismatched grids, empty input.
    #[error("usage error: {0}")]
    Usage(String),

    /// Argument outside the supported branch of a special function.
    #[error("unsupported domain: {0}")]
    Unsupported(String),

    /// An invariant that construction should have guaranteed was violated.
    #[error("internal error: {0}")]
    Internal(String),

    #[error("config error in `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {msg}")]
    Parse { path: String, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}
