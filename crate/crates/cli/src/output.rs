use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{config_hash, sha256_hex, RunConfig};
use crate::error::CliError;

/// Output files of one run, held in memory and written together at the end.
pub struct Outputs {
    command: String,
    config: RunConfig,
    inputs: Vec<(String, String)>,
    files: Vec<(String, Vec<u8>)>,
    stats: Value,
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s.into_bytes()
}

impl Outputs {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Outputs {
            command: command.into(),
            config: config.clone(),
            inputs: Vec::new(),
            files: Vec::new(),
            stats: json!({}),
        }
    }

    pub fn input(&mut self, input: Option<(String, String)>) {
        self.inputs.extend(input);
    }

    pub fn text(&mut self, name: &str, body: String) {
        self.files.push((name.into(), body.into_bytes()));
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) {
        self.files.push((name.into(), to_json(value)));
    }

    pub fn stat(&mut self, key: &str, value: Value) {
        self.stats[key] = value;
    }

    pub fn config_hash(&self) -> String {
        config_hash(&self.command, &self.config, &self.inputs)
    }

    /// Writes every file and `manifest.json` into `dir`.
    pub fn write(self, dir: &Path) -> Result<PathBuf, CliError> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        let hash = self.config_hash();
        let listing: Vec<Value> = self
            .files
            .iter()
            .map(|(name, bytes)| json!({ "file": name, "sha256": sha256_hex(bytes) }))
            .collect();
        let inputs: Vec<Value> = self
            .inputs
            .iter()
            .map(|(p, d)| json!({ "path": p, "sha256": d }))
            .collect();
        let manifest = json!({
            "tool": "extremal-lab",
            "version": env!("CARGO_PKG_VERSION"),
            "library_version": radial_extremal::VERSION,
            "command": self.command,
            "config": self.config,
            "config_hash": hash,
            "inputs": inputs,
            "outputs": listing,
            "stats": self.stats,
        });
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            fs::write(&path, bytes)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        }
        let path = dir.join("manifest.json");
        fs::write(&path, to_json(&manifest))
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}
