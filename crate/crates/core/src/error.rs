use std::io;

/// Errors produced by ingestion and the analyses.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    /// More than half of the input lines could not be parsed, which almost
    /// always means the delimiter or column layout is wrong.
    #[error("{malformed} of {lines} lines are malformed; check the delimiter and column layout")]
    Format { malformed: usize, lines: usize },

    #[error("unknown {kind} `{name}`")]
    NotFound { kind: &'static str, name: String },

    #[error("{0}")]
    Domain(String),

    #[error("correlation is undefined: {0}")]
    UndefinedCorrelation(&'static str),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn not_found(kind: &'static str, name: impl Into<String>) -> Self {
        Error::NotFound {
            kind,
            name: name.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
