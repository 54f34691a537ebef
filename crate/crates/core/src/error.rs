use std::fmt;

/// Errors raised by the estimation, calibration and diagnostics routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("column {index} has no nonzero entry and cannot be normalized")]
    ZeroColumn { index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("ground truth (f, beta0, sigma) is required for this operation")]
    MissingGroundTruth,

    #[error(
        "coordinate descent did not converge after {iterations} sweeps (worst KKT violation {worst_kkt:.3e})"
    )]
    NonConvergence { iterations: usize, worst_kkt: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("enumeration budget exceeded for {what}: {needed} > {limit}")]
    Budget {
        what: &'static str,
        needed: u128,
        limit: u128,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used for process exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numerical,
    Budget,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter(_) => ErrorKind::Usage,
            Error::DimensionMismatch { .. }
            | Error::ZeroColumn { .. }
            | Error::Data(_)
            | Error::MissingGroundTruth
            | Error::Io(_) => ErrorKind::Data,
            Error::NonConvergence { .. } | Error::Numerical(_) => ErrorKind::Numerical,
            Error::Budget { .. } => ErrorKind::Budget,
        }
    }

    pub fn invalid(msg: impl fmt::Display) -> Self {
        Error::InvalidParameter(msg.to_string())
    }
}
