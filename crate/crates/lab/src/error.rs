use std::path::PathBuf;

use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("malformed input {path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("solver failure: {0}")]
    Solver(#[from] abslit_core::Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl LabError {
    /// A core error raised while checking inputs rather than while solving.
    pub fn invalid(e: abslit_core::Error) -> Self {
        LabError::Validation(e.to_string())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Validation(_) | LabError::Format { .. } => 2,
            LabError::Solver(_) | LabError::Io { .. } => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LabError::Validation(_) => "validation",
            LabError::Format { .. } => "format",
            LabError::Solver(_) => "solver",
            LabError::Io { .. } => "io",
        }
    }

    /// One-line machine-readable trailer for the diagnostic stream.
    pub fn trailer(&self) -> String {
        json!({ "status": "error", "exit_code": self.exit_code(), "kind": self.kind(), "message": self.to_string() })
            .to_string()
    }
}
