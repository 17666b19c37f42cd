use thiserror::Error;

/// Failure modes across graph manipulation, linear algebra, sampling and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("node index {index} out of range for a graph on {q} nodes")]
    Index { index: usize, q: usize },

    #[error("operator {0} is not applicable to this graph")]
    Operator(String),

    #[error("graph contains a cycle")]
    Cycle,

    #[error("no valid proposal operator for the current graph")]
    Proposal,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not positive definite (pivot {pivot} = {value})")]
    Decomposition { pivot: usize, value: f64 },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("invalid hyperparameter: {0}")]
    Hyperparameter(String),

    #[error("data ingestion failed: {0}")]
    Ingestion(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("metric undefined: {0}")]
    Metric(String),

    #[error("chain aborted at iteration {iteration}: {source}")]
    Chain {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: String, message: String },
}

impl Error {
    /// Numeric failures (decomposition, singular systems) as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::Decomposition { .. } | Error::Numeric(_) => true,
            Error::Chain { source, .. } => source.is_numeric(),
            _ => false,
        }
    }

    pub fn is_io(&self) -> bool {
        match self {
            Error::Io { .. } => true,
            Error::Chain { source, .. } => source.is_io(),
            _ => false,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn parse(path: impl AsRef<std::path::Path>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.as_ref().display().to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
