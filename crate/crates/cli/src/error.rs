use thiserror::Error;

/// Problems found before any computation starts (exit code 2).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },

    #[error("invalid config: {0}")]
    Parse(String),

    #[error("config schema version {found} is not supported (expected {supported})")]
    Schema { found: u32, supported: u32 },

    #[error("invalid config: {0}")]
    Invalid(String),

    #[error("stage `{stage}`: column `{column}` not found in {path}")]
    MissingColumn { stage: String, column: String, path: String },

    #[error("volatility tests requested but no volatility stage or supplied series for `{commodity}`")]
    MissingVolatility { commodity: String },
}

/// A stage that did not complete.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("stage `{stage}` failed: {message}")]
pub struct StageError {
    pub stage: String,
    pub message: String,
}

impl StageError {
    pub fn new(stage: &str, message: impl std::fmt::Display) -> Self {
        Self {
            stage: stage.to_string(),
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("{} stage(s) failed; first: {}", .0.len(), .0[0])]
    Stages(Vec<StageError>),

    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Stages(_) | RunError::Io { .. } => 3,
        }
    }
}
