//! Run manifests: every artifact-producing command drops a `manifest.json`
//! recording the resolved configuration, seeds, and SHA-256 of each primary
//! artifact. Re-running the recorded invocation must reproduce those hashes
//! byte-for-byte; `wall_clock_unix` is informational and excluded from any
//! determinism comparison.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Result;
use serde::Serialize;

use crate::formats;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    /// file name -> sha256 hex of each primary artifact in the run directory.
    pub artifacts: BTreeMap<String, String>,
    pub version: String,
    pub wall_clock_unix: u64,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, seeds: Vec<u64>) -> Self {
        Self {
            command: command.to_string(),
            config,
            seeds,
            artifacts: BTreeMap::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    /// Hashes `dir/name` and records it under `name`.
    pub fn add_artifact(&mut self, dir: &Path, name: &str) -> Result<()> {
        let hash = formats::sha256_hex(&dir.join(name))?;
        self.artifacts.insert(name.to_string(), hash);
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        formats::write_json(&dir.join("manifest.json"), &serde_json::to_value(self)?)
    }
}
