use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("{what} needs {sites} sites, above the configured cap of {cap}")]
    CapExceeded {
        what: &'static str,
        sites: usize,
        cap: usize,
    },

    #[error("supports differ: {0}")]
    SupportMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("vector is not in the span of the rung basis (residual norm² {residual})")]
    BasisIncomplete { residual: String },

    #[error("recursion table holds {available} rungs, {needed} required")]
    TableTooShort { available: usize, needed: usize },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
