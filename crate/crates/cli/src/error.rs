use std::path::{Path, PathBuf};

use thiserror::Error;

/// Failures of a pipeline command; each maps to one process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{0}")]
    MissingInput(String),

    #[error("{0}")]
    Numerical(String),

    #[error("{0}")]
    Io(String),

    #[error("{0}")]
    Core(#[source] coronal_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::MissingInput(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io(_) => 1,
            CliError::Core(e) => match e {
                coronal_core::Error::Numerical { .. } => 4,
                coronal_core::Error::Parse { .. }
                | coronal_core::Error::Image { .. }
                | coronal_core::Error::DimensionMismatch { .. } => 3,
                coronal_core::Error::Model(_) | coronal_core::Error::Json(_) => 3,
                _ => 1,
            },
        }
    }

    /// Short stable tag printed next to the exit code.
    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "config",
            3 => "input",
            4 => "numerical",
            _ => "runtime",
        }
    }

    /// The single line printed on failure: `error code=N kind=K: text`.
    pub fn line(&self) -> String {
        let text = self.to_string().replace('\n', " ");
        format!("error code={} kind={}: {}", self.exit_code(), self.kind(), text)
    }

    pub fn missing(path: &Path, what: &str) -> Self {
        CliError::MissingInput(format!("missing {what}: {}", path.display()))
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("i/o error on {}: {e}", path.display()))
    }
}

impl From<coronal_core::Error> for CliError {
    fn from(e: coronal_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(coronal_core::Error::Json(e))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Fails with a missing-input error naming every absent path at once.
pub fn require_all(paths: &[(PathBuf, &str)]) -> Result<()> {
    let missing: Vec<String> =
        paths.iter().filter(|(p, _)| !p.exists()).map(|(p, what)| format!("{what} {}", p.display())).collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(CliError::MissingInput(format!("missing inputs: {}", missing.join("; "))))
    }
}
