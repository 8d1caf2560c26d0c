use serde::{Deserialize, Serialize};
use thiserror::Error;

use steinweiss_core::Error as CoreError;

/// Exit status for a run whose tolerances held.
pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_TOLERANCE: i32 = 3;
pub const EXIT_NON_CONVERGENCE: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Self::Io { path: path.as_ref().display().to_string(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(CoreError::Divergence { .. } | CoreError::Degenerate(_) | CoreError::Truncation(_)) => {
                EXIT_NON_CONVERGENCE
            }
            _ => EXIT_VALIDATION,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Core(e) => match e {
                CoreError::DimensionMismatch { .. } => "dimension_mismatch",
                CoreError::InvalidArgument(_) => "invalid_argument",
                CoreError::Inadmissible(_) => "inadmissible",
                CoreError::Degenerate(_) => "degenerate",
                CoreError::Truncation(_) => "truncation",
                CoreError::Divergence { .. } => "divergence",
                CoreError::Io(_) => "io",
                CoreError::Format(_) => "format",
            },
            CliError::Io { .. } => "io",
            CliError::Json(_) => "json",
            CliError::Csv(_) => "csv",
        }
    }

    pub fn record(&self) -> ErrorRecord {
        let details = match self {
            CliError::Core(CoreError::Inadmissible(v)) => v.clone(),
            _ => Vec::new(),
        };
        ErrorRecord { kind: self.kind().into(), message: self.to_string(), details, exit_code: self.exit_code() }
    }
}

/// Machine-readable form of a failed run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
    pub details: Vec<String>,
    pub exit_code: i32,
}

pub type CliResult<T> = std::result::Result<T, CliError>;
