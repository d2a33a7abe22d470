use std::path::PathBuf;

use crate::evolution::IterateRecord;

/// Errors raised by the numerical routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {field}: {reason}")]
    InvalidGrid { field: &'static str, reason: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("shape mismatch: expected {expected} samples, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("{op}: zero-frequency line carries relative energy {ratio:e}")]
    ZeroModeEnergy { op: &'static str, ratio: f64 },

    #[error("{op}: field does not represent a real function")]
    NotReal { op: &'static str },

    #[error("{op}: support condition violated (relative energy {ratio:e} outside the allowed region)")]
    Support { op: &'static str, ratio: f64 },

    #[error("under-resolved quadrature: {required} points per axis required, {given} available")]
    UnderResolved { required: usize, given: usize },

    #[error("frequency ({xi}, {lambda}) is not representable on the target lattice")]
    Unrepresentable { xi: f64, lambda: f64 },

    #[error("Picard iteration diverged after {} iterates", history.len())]
    Divergence { history: Vec<IterateRecord> },

    #[error("reference integrator: {0}")]
    Integrator(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
