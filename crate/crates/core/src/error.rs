use thiserror::Error;

/// Errors raised by graph ingestion, matrix construction and the walk machinery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: node id {id} out of range 1..={n}")]
    Range { line: usize, id: i64, n: usize },

    #[error("{0}")]
    Domain(String),

    #[error("{what} = {requested} exceeds the configured cap of {cap}")]
    Resource {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("eigenvalue-1 eigenspace has dimension {dimension}; stationary vector is not unique")]
    Ambiguous { dimension: usize },

    #[error("internal consistency check failed: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
