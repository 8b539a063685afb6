use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("config parse error in {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: Box<toml::de::Error>,
    },
    #[error("cannot read config {path}: {source}")]
    ConfigRead {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] gcalc_core::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("serialising config: {0}")]
    Serialize(#[from] toml::ser::Error),
}

impl CliError {
    /// 2 for anything the user can fix in the config, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        use gcalc_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Parse { .. } | CliError::ConfigRead { .. } => 2,
            CliError::Core(
                E::InvalidArgument(_)
                | E::InvalidUncertaintySet(_)
                | E::DimensionMismatch { .. }
                | E::CflViolation { .. }
                | E::ControlOutsideSet { .. }
                | E::BudgetExhausted { .. }
                | E::Unsupported(_),
            ) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
