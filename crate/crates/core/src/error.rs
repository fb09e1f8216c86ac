use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("forbidden ray: mu={mu} is not admissible along the path at z={z}")]
    ForbiddenRay { mu: f64, z: f64 },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("temperature solve failed at z index {z_index}: {msg}")]
    Newton { z_index: usize, msg: String },

    #[error("iterations did not converge after {iterations} sweeps (bracket width {bracket:.3e})")]
    NotConverged {
        iterations: usize,
        bracket: f64,
        report: Box<crate::solver::IterationReport>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
