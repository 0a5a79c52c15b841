//! Run manifest: everything needed to tell two runs apart, and nothing that
//! varies between identical runs. Wall times live in `timings.json`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::RunError;
use crate::report::write_text;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TIMINGS_FILE: &str = "timings.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Ok,
    #[serde(rename = "FAILED")]
    Failed,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub status: StageStatus,
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub version: String,
    pub master_seed: u64,
    pub seeds: BTreeMap<String, u64>,
    pub stages: Vec<StageRecord>,
    pub tables: Vec<String>,
    /// sha256 of every emitted file, by path relative to the output directory.
    pub files: BTreeMap<String, String>,
    /// Listed but not hashed.
    pub timings: String,
}

impl RunManifest {
    pub fn failed(&self) -> bool {
        self.stages.iter().any(|s| s.status == StageStatus::Failed)
    }

    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, dir: &Path) -> Result<(), RunError> {
        write_text(&dir.join(MANIFEST_FILE), &self.to_json())
    }
}

pub fn sha256_file(path: &Path) -> Result<String, RunError> {
    let bytes = std::fs::read(path).map_err(|e| RunError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}
