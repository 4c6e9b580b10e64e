use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputRecord {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitSummary {
    pub unit: String,
    pub seed: Option<u64>,
    pub summary: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    /// The same config in file syntax, ready to be fed back with `--config`.
    pub config_text: String,
    pub inputs: Vec<InputRecord>,
    pub outputs: Vec<OutputRecord>,
    pub wall_clock_secs: f64,
    pub workers: usize,
    pub units: Vec<UnitSummary>,
    pub aggregate: serde_json::Value,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let path = if path.is_dir() { path.join(MANIFEST_NAME) } else { path.to_path_buf() };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }

    pub fn to_json_bytes(&self) -> Vec<u8> {
        let mut v = serde_json::to_vec_pretty(self).expect("manifest serializes");
        v.push(b'\n');
        v
    }

    /// Names of outputs whose hashes differ or which only one side has.
    pub fn output_differences(&self, other: &RunManifest) -> Vec<String> {
        let mut out = Vec::new();
        for a in &self.outputs {
            match other.outputs.iter().find(|b| b.name == a.name) {
                Some(b) if b.sha256 == a.sha256 => {}
                _ => out.push(a.name.clone()),
            }
        }
        for b in &other.outputs {
            if !self.outputs.iter().any(|a| a.name == b.name) {
                out.push(b.name.clone());
            }
        }
        out
    }
}
