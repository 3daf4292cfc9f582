use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("out of range at line {line}: {msg}")]
    Range { line: usize, msg: String },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("{func} is undefined at {arg}")]
    Domain { func: &'static str, arg: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("dirichlet estimation failed: {reason}")]
    Estimation { reason: String, last: Vec<f64> },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite value in block {block}")]
    Numerical { block: &'static str },

    #[error("ELBO decreased at iteration {iteration}: {previous} -> {current}\n{breakdown}")]
    ElboDecrease {
        iteration: usize,
        previous: f64,
        current: f64,
        breakdown: String,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("index out of range: {0}")]
    Index(String),

    #[error("model format error: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
