use thiserror::Error;

/// Failure of a CLI run, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("budget exhausted: {0}")]
    Budget(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Budget(_) => 4,
        }
    }

    pub(crate) fn key(key: &str, reason: impl std::fmt::Display) -> Self {
        CliError::Usage(format!("`{key}`: {reason}"))
    }
}

impl From<oscillab_core::Error> for CliError {
    fn from(e: oscillab_core::Error) -> Self {
        use oscillab_core::Error as E;
        match e {
            E::InvalidParameter { name, reason } => CliError::key(name, reason),
            E::UnknownCompressor(c) => CliError::key("compressor", format!("unknown compressor `{c}`")),
            e @ (E::LevelOutOfRange { .. } | E::ToleranceIncompatible { .. } | E::PrecisionUnattainable { .. }) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
