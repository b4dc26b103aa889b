use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library. Contract violations (caller bugs such as
/// mapping an unfiltered interval or ranking out of range) panic instead.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("insufficient data: need at least {needed} {what}, got {got}")]
    InsufficientData {
        what: &'static str,
        needed: u64,
        got: u64,
    },

    #[error("corrupt table: {0}")]
    CorruptTable(String),

    #[error("output of {got} bits exceeds the {max}-bit entry capacity")]
    Capacity { got: u32, max: u32 },

    #[error("malformed {what} at byte {offset}: {detail}")]
    Format {
        what: &'static str,
        offset: u64,
        detail: String,
    },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
