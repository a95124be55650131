use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad argument or configuration value.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two objects that must agree in shape or grid do not.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Malformed or truncated file contents.
    #[error("format error in {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    /// A numerical procedure produced NaN/inf or diverged.
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// Pressure solve did not meet its tolerance.
    #[error("pressure projection did not converge after {iterations} iterations (residual {residual:e}, tolerance {tolerance:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }

    /// Process exit code for this error class: 2 usage/config, 3 numeric, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Shape(_) | Error::Json(_) => 2,
            Error::Numeric(_) | Error::NonConvergence { .. } => 3,
            Error::Io { .. } | Error::Format { .. } => 4,
        }
    }
}

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err($crate::error::Error::InvalidArgument(format!($($arg)+)));
        }
    };
}
pub(crate) use ensure;
