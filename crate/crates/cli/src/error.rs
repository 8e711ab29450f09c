use std::path::{Path, PathBuf};

use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid config at {location}: {message}")]
    Config { location: String, message: String },

    #[error(transparent)]
    Numerical(#[from] quench_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } => 2,
            Self::Numerical(_) => 3,
            Self::Io { .. } => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config { .. } => "config",
            Self::Numerical(_) => "numerical",
            Self::Io { .. } => "io",
        }
    }

    /// Machine-readable error record.
    pub fn record(&self) -> serde_json::Value {
        let location = match self {
            Self::Config { location, .. } => Some(location.clone()),
            Self::Io { path, .. } => Some(path.display().to_string()),
            Self::Numerical(_) => None,
        };
        json!({
            "error": {
                "kind": self.kind(),
                "exit_code": self.exit_code(),
                "location": location,
                "message": self.to_string(),
            }
        })
    }
}
