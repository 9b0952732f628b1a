//! Configuration, dispatch and output handling for the `polaron` binary.

pub mod config;
pub mod figures;
pub mod manifest;
pub mod run;
pub mod sweep;

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numeric failure in {stage}: {source}")]
    Numeric {
        stage: &'static str,
        source: polaron_core::Error,
    },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn field(field: impl AsRef<str>, reason: impl AsRef<str>) -> Self {
        CliError::Config(format!(
            "invalid field `{}`: {}",
            field.as_ref(),
            reason.as_ref()
        ))
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric { .. } => 3,
            CliError::Io { .. } => 1,
        }
    }
}

/// Tags a core error with the stage that produced it.
pub(crate) trait Provenance<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError>;
}

impl<T> Provenance<T> for polaron_core::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Numeric { stage, source })
    }
}
