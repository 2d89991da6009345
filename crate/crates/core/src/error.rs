use thiserror::Error;

/// Errors raised by the simulator and analysis routines.
///
/// Every variant belongs to one of three categories (configuration,
/// numerics, I/O) which the CLI maps onto its exit codes.
#[derive(Debug, Error)]
pub enum ReadoutError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("decay times are degenerate ({0}); use populations_numeric instead")]
    DegenerateRates(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("fit did not converge after {iterations} iterations (cost {cost:.3e})")]
    FitNotConverged { iterations: usize, cost: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("serialization error: {0}")]
    Serde(String),
}

/// Coarse error category, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Numeric,
    Io,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 2,
            ErrorCategory::Numeric => 3,
            ErrorCategory::Io => 4,
        }
    }
}

impl ReadoutError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            ReadoutError::Config(_) | ReadoutError::InvalidArgument(_) => ErrorCategory::Config,
            ReadoutError::DegenerateRates(_)
            | ReadoutError::Numeric(_)
            | ReadoutError::FitNotConverged { .. } => ErrorCategory::Numeric,
            ReadoutError::Io { .. } | ReadoutError::Csv(_) | ReadoutError::Serde(_) => {
                ErrorCategory::Io
            }
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        ReadoutError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, ReadoutError>;
