//! Record of a run: what was asked, what ran, what was written.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::geometry::HorizonData;

use super::config::{RunConfig, Stage};
use super::tables::CSV_SCHEMA_VERSION;
use super::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Ok,
    Failed,
    /// Not run because a dependency failed.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub status: StageStatus,
    pub wall_seconds: f64,
    /// Requested explicitly (as opposed to pulled in as a dependency).
    pub requested: bool,
    pub optional: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub csv_schema_version: u32,
    pub crate_version: String,
    pub config_hash: String,
    pub config: RunConfig,
    /// Directory the relative paths in `outputs` refer to.
    pub output_dir: PathBuf,
    pub stages: Vec<StageRecord>,
    pub outputs: Vec<String>,
    pub partial_success: bool,
    #[serde(default)]
    pub horizon: Option<HorizonData>,
    /// Scalar results keyed by name (fit slopes, spreads, counts).
    #[serde(default)]
    pub summary: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(config: &RunConfig, output_dir: &Path) -> Self {
        Self {
            csv_schema_version: CSV_SCHEMA_VERSION,
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config.hash(),
            config: config.clone(),
            output_dir: output_dir.to_path_buf(),
            stages: Vec::new(),
            outputs: Vec::new(),
            partial_success: false,
            horizon: None,
            summary: BTreeMap::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::MissingStageOutput(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::MissingStageOutput(format!("{}: {e}", path.display())))
    }

    pub fn save(&self) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(&self.output_dir)?;
        let path = self.output_dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Io(std::io::Error::other(e)))?;
        std::fs::write(&path, text + "\n")?;
        Ok(path)
    }

    pub fn status(&self, stage: Stage) -> Option<StageStatus> {
        self.stages.iter().find(|r| r.stage == stage).map(|r| r.status)
    }

    pub fn has_output(&self, relative: &str) -> bool {
        self.outputs.iter().any(|o| o == relative)
    }

    /// Listed outputs that are missing or empty.
    pub fn missing_outputs(&self) -> Vec<String> {
        self.outputs
            .iter()
            .filter(|o| std::fs::metadata(self.output_dir.join(o)).map(|m| m.len() == 0).unwrap_or(true))
            .cloned()
            .collect()
    }
}
