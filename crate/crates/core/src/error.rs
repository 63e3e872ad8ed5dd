use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix is not symmetric at ({row}, {col}): {upper} vs {lower}")]
    NotSymmetric {
        row: usize,
        col: usize,
        upper: f64,
        lower: f64,
    },

    #[error("invalid correlation entry ({row}, {col}) = {value}")]
    InvalidCorrelation { row: usize, col: usize, value: f64 },

    #[error("matrix is not positive definite: eigenvalue {eigenvalue:e} below threshold {threshold:e}")]
    NotPositiveDefinite { eigenvalue: f64, threshold: f64 },

    #[error("invalid configuration `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("degrees of freedom {nu} must exceed 2 for finite variance")]
    InfiniteVariance { nu: f64 },

    #[error("insufficient data for {what}: need {needed}, got {got}")]
    InsufficientData {
        what: String,
        needed: usize,
        got: usize,
    },

    #[error("return undefined at step {step}: base price {base} is not positive")]
    UndefinedReturn { step: usize, base: f64 },

    #[error("degenerate volatility forecast {sigma:e} at step {step}")]
    DegenerateVolatility { step: usize, sigma: f64 },

    #[error("numerical fault on path {path} at step {step}: {detail}")]
    NumericalFault {
        path: usize,
        step: usize,
        detail: String,
    },

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for faults raised while advancing a path, as opposed to bad inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericalFault { .. } | Error::DegenerateVolatility { .. }
        )
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
