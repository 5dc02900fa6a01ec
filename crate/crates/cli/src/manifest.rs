//! Per-command run manifest.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::failure::{CmdResult, Classify};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: u32,
    pub command: String,
    pub tool_version: String,
    /// Fully resolved configuration; rerunning with it reproduces the outputs.
    pub config: Config,
    pub seed: u64,
    pub parallel: bool,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub notes: Vec<String>,
    pub failures: Vec<String>,
}

pub fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn start(command: &str, config: &Config) -> Self {
        Self {
            version: MANIFEST_VERSION,
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            seed: config.cv.seed,
            parallel: phri_core::par::is_parallel(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            started_unix_ms: now_ms(),
            finished_unix_ms: 0,
            notes: Vec::new(),
            failures: Vec::new(),
        }
    }

    pub fn file_name(command: &str) -> String {
        format!("{command}.manifest.json")
    }

    /// Stamps the finish time and writes `<dir>/<command>.manifest.json`.
    pub fn finish(mut self, dir: &Path) -> CmdResult<PathBuf> {
        self.finished_unix_ms = now_ms();
        let path = dir.join(Self::file_name(&self.command));
        let mut json = serde_json::to_string_pretty(&self).internal_err()?;
        json.push('\n');
        std::fs::write(&path, json)
            .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))
            .data_err()?;
        Ok(path)
    }
}
