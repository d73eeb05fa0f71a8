//! Run manifests: a sidecar JSON written next to every output artifact,
//! recording the subcommand, resolved paths, seed, config echo, tool
//! version, and timestamps.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::util::write_atomic;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub version: String,
    pub started_at: String,
    pub finished_at: Option<String>,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn resolved(path: &Path) -> String {
    std::fs::canonicalize(path)
        .unwrap_or_else(|_| path.to_path_buf())
        .display()
        .to_string()
}

impl RunManifest {
    pub fn start(subcommand: impl Into<String>) -> Self {
        Self {
            subcommand: subcommand.into(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            seed: None,
            config: serde_json::Value::Null,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_at: now(),
            finished_at: None,
        }
    }

    pub fn input(mut self, name: &str, path: &Path) -> Self {
        self.inputs.insert(name.to_string(), resolved(path));
        self
    }

    pub fn output(mut self, path: &Path) -> Self {
        self.outputs.push(path.display().to_string());
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn config(mut self, config: serde_json::Value) -> Self {
        self.config = config;
        self
    }

    /// Stamps the end time and writes the sidecar `<out>.manifest.json`
    /// atomically next to the named output artifact.
    pub fn finish(mut self, out: &Path) -> Result<()> {
        self.finished_at = Some(now());
        let mut json = serde_json::to_string_pretty(&self).expect("manifest serialization cannot fail");
        json.push('\n');
        write_atomic(&sidecar_path(out), json.as_bytes())?;
        Ok(())
    }
}

/// `<out>.manifest.json` for an output artifact path.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_path_appends_the_suffix() {
        assert_eq!(
            sidecar_path(Path::new("/tmp/aug.jsonl")),
            Path::new("/tmp/aug.jsonl.manifest.json")
        );
    }

    #[test]
    fn manifest_is_written_next_to_the_artifact() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("preds.jsonl");
        std::fs::write(&out, b"{}\n").unwrap();
        RunManifest::start("simulate")
            .input("eval", &out)
            .output(&out)
            .seed(7)
            .config(serde_json::json!({"profile": "disentangled"}))
            .finish(&out)
            .unwrap();
        let manifest_file = dir.path().join("preds.jsonl.manifest.json");
        let loaded: RunManifest =
            serde_json::from_str(&std::fs::read_to_string(manifest_file).unwrap()).unwrap();
        assert_eq!(loaded.subcommand, "simulate");
        assert_eq!(loaded.seed, Some(7));
        assert!(loaded.finished_at.is_some());
        assert_eq!(loaded.version, env!("CARGO_PKG_VERSION"));
    }
}
