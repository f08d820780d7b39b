//! Run manifests: enough to repeat a run and to tell what it produced.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub subcommand: String,
    /// The parsed command, replayable as-is.
    pub command: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<Value>,
    #[serde(default)]
    pub inputs: Vec<PathBuf>,
    #[serde(default)]
    pub outputs: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Seconds per stage.
    #[serde(default)]
    pub timings: BTreeMap<String, f64>,
    #[serde(default)]
    pub extra: BTreeMap<String, Value>,
}

impl Manifest {
    pub fn new(subcommand: &str, command: Value, threads: Option<usize>) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            command,
            config: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed: None,
            threads,
            timings: BTreeMap::new(),
            extra: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.extra.insert(key.to_string(), value);
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// `dir/name` -> `dir/name<suffix>`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    path.with_file_name(name)
}

pub struct Stopwatch {
    last: Instant,
}

impl Stopwatch {
    pub fn new() -> Self {
        Self {
            last: Instant::now(),
        }
    }

    pub fn lap(&mut self, m: &mut Manifest, stage: &str) {
        let now = Instant::now();
        *m.timings.entry(stage.to_string()).or_default() += (now - self.last).as_secs_f64();
        self.last = now;
    }
}
