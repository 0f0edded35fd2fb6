use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

/// One configuration problem, located by a dotted path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

impl Issue {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Issue {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Issue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("malformed configuration: {0}")]
    Syntax(String),

    #[error("invalid configuration:\n{}", .0.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Issue>),

    #[error("task {task} needs a {needs} model")]
    WrongModel { task: &'static str, needs: &'static str },

    #[error("{0} invariant check(s) failed")]
    ChecksFailed(usize),

    #[error("cannot write output: {0}")]
    Output(String),

    #[error(transparent)]
    Core(#[from] mmtail::Error),
}

impl CliError {
    /// Machine-readable code for error payloads.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Syntax(_) => "config-syntax",
            CliError::Invalid(_) => "config-invalid",
            CliError::WrongModel { .. } => "wrong-model",
            CliError::ChecksFailed(_) => "checks-failed",
            CliError::Output(_) => "output",
            CliError::Core(e) => e.code(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Syntax(_) | CliError::Invalid(_) | CliError::WrongModel { .. } => 2,
            _ => 1,
        }
    }

    /// `{"error": {"code", "message", "issues"?}}`.
    pub fn to_json(&self) -> serde_json::Value {
        let mut body = serde_json::json!({ "code": self.code(), "message": self.to_string() });
        if let CliError::Invalid(issues) = self {
            body["issues"] = serde_json::to_value(issues).unwrap_or_default();
        }
        serde_json::json!({ "error": body })
    }
}
