use std::fmt;
use std::io;
use std::path::PathBuf;

use iqa_core::IqaError;
use serde_json::{json, Value};

/// Everything that can end a run early, with its stable exit code:
/// 1 for unreadable or unusable input, 2 for dimension mismatch, 3 for
/// configuration and parameter errors.
#[derive(Debug)]
pub enum CliError {
    Core(IqaError),
    Io { path: PathBuf, source: io::Error },
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Config(_) => 3,
            CliError::Core(e) => match e {
                IqaError::Io { .. }
                | IqaError::Decode { .. }
                | IqaError::InvalidImage(_)
                | IqaError::DegenerateInput => 1,
                IqaError::DimensionMismatch { .. } => 2,
                _ => 3,
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Config(_) => "config",
            CliError::Core(e) => match e {
                IqaError::Io { .. } => "io",
                IqaError::Decode { .. } => "decode",
                IqaError::InvalidImage(_) => "invalid_image",
                IqaError::DegenerateInput => "degenerate_input",
                IqaError::DimensionMismatch { .. } => "dimension_mismatch",
                IqaError::ImageTooSmall { .. } => "image_too_small",
                IqaError::NotNormalized { .. } => "not_normalized",
                IqaError::UndefinedSensitivity(_) => "undefined_sensitivity",
                IqaError::EmptyReport => "empty_report",
                IqaError::Unknown { .. } | IqaError::InvalidParameter(_) => "config",
            },
        }
    }

    pub fn to_json(&self) -> Value {
        json!({ "error": { "kind": self.kind(), "code": self.exit_code(), "message": self.to_string() } })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Config(msg) => f.write_str(msg),
        }
    }
}

impl From<IqaError> for CliError {
    fn from(e: IqaError) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;
