//! Run manifests: every command writes one next to its outputs so a run can
//! be reproduced from the recorded configuration and seed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// The full effective configuration, flag defaults included.
    pub args: serde_json::Value,
    pub seed: u64,
    pub threads: usize,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub timings_ms: BTreeMap<String, u64>,
}

impl RunManifest {
    pub fn new(command: &str, args: serde_json::Value, seed: u64, threads: usize) -> Self {
        RunManifest {
            tool: "sgmrd".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            args,
            seed,
            threads,
            inputs: Vec::new(),
            outputs: Vec::new(),
            timings_ms: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, path: impl Into<PathBuf>) -> &mut Self {
        self.inputs.push(path.into());
        self
    }

    pub fn output(&mut self, path: impl Into<PathBuf>) -> &mut Self {
        self.outputs.push(path.into());
        self
    }

    /// Times a phase and records its wall-clock duration.
    pub fn time_phase<T>(&mut self, name: &str, body: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let value = body();
        self.timings_ms
            .insert(name.into(), start.elapsed().as_millis() as u64);
        value
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, json + "\n").map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// `data.csv` -> `data.<suffix>` in the same directory.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    path.with_extension("").with_extension(suffix)
}
