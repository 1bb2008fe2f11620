use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
///
/// The variants are grouped the way the command-line front end reports them:
/// input problems ([`Error::Parse`], [`Error::Spec`], [`Error::Usage`], [`Error::Io`]),
/// numerical trouble ([`Error::Numerical`], [`Error::Degenerate`], [`Error::Collinear`],
/// [`Error::Capacity`]) and estimation failures ([`Error::NonConvergence`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("model specification error: {0}")]
    Spec(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("degenerate model: {0}")]
    Degenerate(String),

    #[error("collinear statistics: {}", .0.join(", "))]
    Collinear(Vec<String>),

    #[error("no convergence after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by malformed input rather than by the estimation itself.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Usage(_)
                | Error::Parse { .. }
                | Error::Spec(_)
                | Error::Io { .. }
                | Error::Csv(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
