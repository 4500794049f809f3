use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("ontology contains a cycle through node {0}")]
    CyclicGraph(usize),

    #[error("id {id} out of range for size {size}")]
    IdOutOfRange { id: usize, size: usize },

    #[error("self-loop on node {0}")]
    SelfLoop(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("no support: every coordinate is masked out or has zero concentration")]
    EmptySupport,

    #[error("non-positive argument to log_beta: ({0}, {1})")]
    NonPositiveArgument(f64, f64),

    #[error("observed token (doc {doc}, word {word}) has zero probability under the model")]
    ZeroProbabilityToken { doc: usize, word: usize },

    #[error("QP did not converge after {iterations} iterations (gradient-mapping norm {grad_norm:e})")]
    SolverDidNotConverge { iterations: usize, grad_norm: f64 },

    #[error("degenerate move: {0}")]
    DegenerateMove(&'static str),

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("trace length mismatch: {0}")]
    LengthMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors caused by user input rather than by the computation itself.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Parse { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
