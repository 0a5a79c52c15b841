//! Config-driven pipeline: data preparation, volatility models, diagnostic
//! batteries and causality tests, written out as markdown and CSV tables.

pub mod config;
pub mod data;
pub mod error;
pub mod manifest;
pub mod pipeline;
pub mod report;
pub mod simulate;
pub mod stages;

pub use config::{LoadedConfig, PipelineConfig};
pub use error::{ConfigError, RunError, StageError};
pub use manifest::RunManifest;
pub use pipeline::{run, RunOutcome};
