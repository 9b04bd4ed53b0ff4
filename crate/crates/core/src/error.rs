use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = GsamError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum GsamError {
    /// Inconsistent or invalid configuration (bounds, missing fields, bad shapes).
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    /// A loss, gradient or parameter became NaN/Inf.
    #[error("non-finite {quantity}{}", step_suffix(*.step))]
    Numeric {
        step: Option<u64>,
        quantity: &'static str,
    },

    #[error("point is not stationary: gradient norm {grad_norm:e} exceeds tolerance {tolerance:e}")]
    Stationarity { grad_norm: f64, tolerance: f64 },

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn step_suffix(step: Option<u64>) -> String {
    match step {
        Some(t) => format!(" at step {t}"),
        None => String::new(),
    }
}

impl GsamError {
    pub(crate) fn numeric(quantity: &'static str) -> Self {
        GsamError::Numeric {
            step: None,
            quantity,
        }
    }

    /// Attaches a step index to a numeric error; other errors pass through.
    pub fn at_step(self, t: u64) -> Self {
        match self {
            GsamError::Numeric { quantity, .. } => GsamError::Numeric {
                step: Some(t),
                quantity,
            },
            other => other,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GsamError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            GsamError::Numeric { .. } => 2,
            GsamError::Io { .. } => 3,
            _ => 1,
        }
    }
}

pub(crate) fn check_dim(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(GsamError::Dimension {
            context,
            expected,
            got,
        })
    }
}
