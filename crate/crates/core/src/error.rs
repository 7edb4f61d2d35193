use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported spin quantum number {0}")]
    UnsupportedSpin(f64),

    #[error("joint Hilbert dimension {dim} exceeds the limit of {limit}")]
    DimensionOverflow { dim: usize, limit: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed pulse sequence: {0}")]
    MalformedSequence(String),

    #[error("fit did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("inconsistent peak set: rms residual {rms:.3} MHz exceeds {threshold:.3} MHz")]
    InconsistentPeaks { rms: f64, threshold: f64 },

    #[error("baseline calibration impossible: {0}")]
    Baseline(String),

    #[error("{} configuration error(s):\n{}", .0.len(), format_config_errors(.0))]
    Config(Vec<ConfigError>),

    #[error("malformed spectrum file {path}: {message}")]
    SpectrumFormat { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable category, used for CLI exit codes.
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) => ErrorCategory::Config,
            Error::Io { .. } | Error::SpectrumFormat { .. } => ErrorCategory::Io,
            Error::NonConvergence { .. }
            | Error::InconsistentPeaks { .. }
            | Error::Baseline(_) => ErrorCategory::Analysis,
            _ => ErrorCategory::Physics,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Io,
    Physics,
    Analysis,
}

impl ErrorCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Config => "config",
            ErrorCategory::Io => "io",
            ErrorCategory::Physics => "physics",
            ErrorCategory::Analysis => "analysis",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 2,
            ErrorCategory::Io => 3,
            ErrorCategory::Physics => 4,
            ErrorCategory::Analysis => 5,
        }
    }
}

/// A schema or syntax problem in an experiment config, with its location.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub column: usize,
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.field.is_empty() {
            write!(f, "{}:{}: {}", self.line, self.column, self.message)
        } else {
            write!(
                f,
                "{}:{}: `{}`: {}",
                self.line, self.column, self.field, self.message
            )
        }
    }
}

fn format_config_errors(errors: &[ConfigError]) -> String {
    errors
        .iter()
        .map(|e| format!("  {e}"))
        .collect::<Vec<_>>()
        .join("\n")
}
