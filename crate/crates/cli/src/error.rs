use mapfrag_core::Error;
use serde_json::json;

/// Failure of a CLI run, mapped to an exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] Error),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Core(e) if e.is_numeric() || matches!(e, Error::Data(_)) => 3,
            CliError::Core(_) => 2,
            CliError::Validation(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Core(Error::NotMalthusian(_)) => "not_malthusian",
            CliError::Core(e) if e.is_numeric() => "numeric",
            CliError::Core(Error::Data(_)) => "data",
            CliError::Core(_) => "parameter",
            CliError::Validation(_) => "validation",
        }
    }

    /// One-line JSON error record for standard error.
    pub fn record(&self) -> String {
        json!({"error": {"kind": self.kind(), "exit_code": self.exit_code(), "message": self.to_string()}}).to_string()
    }
}
