use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a model invariant. The message names the offending field.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("optimal policy is not unique (minimum gap is zero)")]
    NonUniqueOptimum,

    #[error("MDP is not communicating: state {to} is unreachable from state {from}")]
    NonCommunicating { from: usize, to: usize },

    #[error("uniform-policy chain is not ergodic: pair {to} never reachable from pair {from} in {steps} steps")]
    NonErgodic {
        from: usize,
        to: usize,
        steps: usize,
    },

    #[error("{what} did not converge (residual {residual:e})")]
    NonConvergence { what: &'static str, residual: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular matrix in {0}")]
    Singular(&'static str),

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

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    /// True for failures of an iterative numerical routine.
    pub fn is_non_convergence(&self) -> bool {
        matches!(self, Error::NonConvergence { .. } | Error::Singular(_))
    }

    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Validation(_) | Error::Json { .. })
    }
}
