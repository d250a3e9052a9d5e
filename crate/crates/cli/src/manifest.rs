//! Run manifests: everything needed to reproduce a run byte-for-byte,
//! written next to the artifacts it lists.

use serde::Serialize;
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub instance: PathBuf,
    pub seed: u64,
    pub options: Value,
    pub outputs: Vec<PathBuf>,
    pub wall_clock_seconds: f64,
    pub tool_version: &'static str,
}

pub struct ManifestBuilder {
    command: String,
    instance: PathBuf,
    seed: u64,
    options: Value,
    outputs: Vec<PathBuf>,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str, instance: &Path, seed: u64, options: Value) -> Self {
        Self {
            command: command.to_string(),
            instance: instance.to_path_buf(),
            seed,
            options,
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn add_output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn write(self, out_dir: &Path) -> std::io::Result<PathBuf> {
        let manifest = RunManifest {
            command: self.command,
            instance: self.instance,
            seed: self.seed,
            options: self.options,
            outputs: self.outputs,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            tool_version: env!("CARGO_PKG_VERSION"),
        };
        let path = out_dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        std::fs::write(&path, text)?;
        Ok(path)
    }
}
