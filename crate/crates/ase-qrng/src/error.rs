use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = AppError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum AppError {
    #[error(transparent)]
    Model(#[from] ase_qrng_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{field}: {message}")]
    Config { field: String, message: String },
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        AppError::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        AppError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AppError::Model(ase_qrng_core::Error::Domain { .. }) => "domain",
            AppError::Model(_) => "model",
            AppError::Io { .. } => "io",
            AppError::Parse { .. } => "parse",
            AppError::Config { .. } => "config",
        }
    }

    /// Offending field or file, when known.
    pub fn field(&self) -> Option<String> {
        match self {
            AppError::Model(ase_qrng_core::Error::Domain { field, .. }) => Some((*field).to_owned()),
            AppError::Io { path, .. } | AppError::Parse { path, .. } => {
                Some(path.display().to_string())
            }
            AppError::Config { field, .. } => Some(field.clone()),
            AppError::Model(_) => None,
        }
    }

    /// One line, `key=value` pairs, message JSON-quoted.
    pub fn machine_line(&self) -> String {
        let message = serde_json::to_string(&self.to_string()).unwrap_or_default();
        match self.field() {
            Some(field) => format!(
                "error kind={} field={} message={}",
                self.kind(),
                serde_json::to_string(&field).unwrap_or_default(),
                message
            ),
            None => format!("error kind={} message={}", self.kind(), message),
        }
    }
}
