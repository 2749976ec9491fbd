//! Run manifest written next to the outputs of `simulate` and `sweep`.
//!
//! The manifest is written with status `incomplete` before any work starts
//! and rewritten when the run finishes, so a run that was killed or failed
//! still leaves a record of what it was doing.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Incomplete,
    Complete,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct AbortedEntry {
    pub condition_id: usize,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Vec<String>,
    pub status: Status,
    pub started_unix_s: f64,
    pub finished_unix_s: Option<f64>,
    pub seeds: Vec<u64>,
    /// Effective configuration, flag overrides included, as TOML.
    pub config: String,
    pub outputs: Vec<PathBuf>,
    pub aborted_runs: Vec<AbortedEntry>,
    pub error: Option<String>,
    #[serde(skip)]
    path: PathBuf,
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl RunManifest {
    /// Creates the manifest and writes it immediately as incomplete.
    pub fn begin(path: &Path, config: String, seeds: Vec<u64>, outputs: Vec<PathBuf>) -> CliResult<Self> {
        let manifest = Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: std::env::args().collect(),
            status: Status::Incomplete,
            started_unix_s: now(),
            finished_unix_s: None,
            seeds,
            config,
            outputs,
            aborted_runs: Vec::new(),
            error: None,
            path: path.to_path_buf(),
        };
        manifest.write()?;
        Ok(manifest)
    }

    pub fn write(&self) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Input(format!("cannot serialize manifest: {e}")))?;
        let tmp = self.path.with_extension("json.tmp");
        fs::write(&tmp, text + "\n").map_err(|e| CliError::io(&tmp, e))?;
        fs::rename(&tmp, &self.path).map_err(|e| CliError::io(&self.path, e))
    }

    /// Records the outcome of `result` and rewrites the manifest.
    pub fn finish<T>(&mut self, result: &CliResult<T>) -> CliResult<()> {
        self.finished_unix_s = Some(now());
        match result {
            Ok(_) => self.status = Status::Complete,
            Err(e) => {
                self.status = Status::Failed;
                self.error = Some(e.to_string());
            }
        }
        self.write()
    }
}
