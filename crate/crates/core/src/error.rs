use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent shapes or invalid hyperparameters.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error(
        "constraint matrix is ill-conditioned (min eigenvalue {min_eigenvalue:e}, max {max_eigenvalue:e}); increase lambda"
    )]
    IllConditioned {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error("label system is singular ({0}); at least one labeled instance is required")]
    Singular(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable category, used by the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Argument(_) => "argument",
            Error::IllConditioned { .. } => "ill_conditioned",
            Error::Singular(_) => "singular",
            Error::UndefinedMetric(_) => "undefined_metric",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
            Error::Json { .. } => "json",
        }
    }
}
