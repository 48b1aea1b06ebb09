use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the estimation and evaluation layers.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Shapes of the supplied operands do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A matrix required to be symmetric positive definite is not.
    #[error("matrix not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// A numerical failure inside an iterative procedure. The sweep index is
    /// attached when the failure happened inside an MCMC run.
    #[error("numerical failure{}: {message}", sweep.map(|s| format!(" at sweep {s}")).unwrap_or_default())]
    Numerical { sweep: Option<usize>, message: String },

    /// A requested configuration was rejected before any computation
    /// (e.g. an explosive coefficient matrix for a simulation).
    #[error("rejected configuration: {0}")]
    RejectedConfiguration(String),

    /// I/O failure with the offending path attached.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical {
            sweep: None,
            message: msg.into(),
        }
    }

    /// Attach a sweep index to a numerical failure, leaving other variants alone.
    pub(crate) fn at_sweep(self, sweep: usize) -> Self {
        match self {
            Error::Numerical { message, .. } => Error::Numerical {
                sweep: Some(sweep),
                message,
            },
            Error::NotPositiveDefinite(m) => Error::Numerical {
                sweep: Some(sweep),
                message: format!("matrix not positive definite: {m}"),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
