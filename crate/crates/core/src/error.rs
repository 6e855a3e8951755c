use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("degenerate input: {0}")]
    Degeneracy(String),

    #[error("pole of elementary map at z = {0}")]
    Pole(f64),

    /// A zipper step produced a tip outside the open upper half-plane.
    #[error("numerical failure at boundary sample {sample}: image {re:e}{im:+e}i is not in the upper half-plane; refine the boundary spacing")]
    NumericalFailure { sample: usize, re: f64, im: f64 },

    #[error("crowding: non-finite value in map chain at step {0}")]
    Crowding(usize),

    #[error("grid resolution too coarse: {0}")]
    Resolution(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
