use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{IoError, Result};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputEntry {
    /// Relative to the output directory.
    pub path: String,
    /// One of `config`, `run-csv`, `sweep-csv`, `checkpoint`,
    /// `potential-table`, `eta-profile`, `energy-report`.
    pub role: String,
}

/// Index of the files a command produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Hex form of the 64-bit config hash.
    pub config_hash: String,
    pub artifact_version: String,
    pub outputs: Vec<OutputEntry>,
    /// Runtime checks that did not hold (reported, not fatal).
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl RunManifest {
    pub fn new(config_hash: u64) -> Self {
        Self {
            config_hash: format!("{config_hash:016x}"),
            artifact_version: ARTIFACT_VERSION.to_string(),
            outputs: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn add(&mut self, path: impl Into<String>, role: &str) {
        self.outputs.push(OutputEntry {
            path: path.into(),
            role: role.to_string(),
        });
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| IoError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| IoError::Refused(format!("{}: {e}", path.display())))
    }

    /// Checks that every listed file exists under `dir`.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        for o in &self.outputs {
            if !dir.join(&o.path).is_file() {
                return Err(IoError::Refused(format!("manifest lists missing file {}", o.path)));
            }
        }
        Ok(())
    }
}
