//! Error type shared across the crate.
//!
//! Every message names the violated precondition so that callers (notably the
//! CLI) can surface it verbatim.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two grids that must agree in shape do not.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A grid or file holds values outside the documented range (NaN, Inf,
    /// negative disparity, non-binary mask, ...).
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// The conjugate-gradient solver hit its iteration cap.
    #[error("solver did not converge: residual {residual:.3e} after {iterations} iterations (tolerance {tolerance:.3e})")]
    SolverDidNotConverge {
        residual: f64,
        tolerance: f64,
        iterations: usize,
    },

    /// A metric was requested on an empty valid set.
    #[error("empty valid set: {0}")]
    EmptyValidSet(String),

    /// File format violation (bad PFM header, unsupported PNG layout, ...).
    #[error("format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("io error on {path}: {source}")]
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

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
