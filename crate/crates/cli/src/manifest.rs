//! Run manifest: every command writes `run_manifest.json` into the output
//! directory recording the resolved configuration, tool versions, per-stage
//! wall-clock timings, and a SHA-256 hash of every file it produced.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::CliError;

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub versions: BTreeMap<String, String>,
    pub config: PipelineConfig,
    /// Stage name -> wall-clock milliseconds.
    pub timings_ms: BTreeMap<String, u128>,
    /// Output file name -> SHA-256 hex digest.
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, config: &PipelineConfig) -> Self {
        let mut versions = BTreeMap::new();
        versions.insert("histo3d".to_string(), env!("CARGO_PKG_VERSION").to_string());
        RunManifest {
            command: command.to_string(),
            versions,
            config: config.clone(),
            timings_ms: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    /// Time a stage and record it under `name`.
    pub fn stage<T>(
        &mut self,
        name: &str,
        f: impl FnOnce() -> Result<T, CliError>,
    ) -> Result<T, CliError> {
        let start = Instant::now();
        let out = f()?;
        self.timings_ms
            .insert(name.to_string(), start.elapsed().as_millis());
        Ok(out)
    }

    /// Write a file into `dir`, record its hash, and return its path.
    pub fn write_output(
        &mut self,
        dir: &Path,
        name: &str,
        contents: &str,
    ) -> Result<PathBuf, CliError> {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Io(format!("cannot create {}: {e}", parent.display())))?;
        }
        std::fs::write(&path, contents)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        self.outputs
            .insert(name.to_string(), sha256_hex(contents.as_bytes()));
        Ok(path)
    }

    /// Serialize and write the manifest itself (not hashed into `outputs`).
    pub fn finish(&self, dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Domain(format!("cannot serialize run manifest: {e}")))?;
        let path = dir.join("run_manifest.json");
        std::fs::write(&path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn manifest_records_outputs_and_timings() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig::default();
        let mut m = RunManifest::new("slice", &cfg);
        m.stage("demo", || Ok(())).unwrap();
        m.write_output(dir.path(), "x.txt", "payload").unwrap();
        m.finish(dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("run_manifest.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["command"], "slice");
        assert_eq!(v["outputs"]["x.txt"], sha256_hex(b"payload"));
        assert!(v["timings_ms"]["demo"].is_number());
        assert!(v["versions"]["histo3d"].is_string());
    }
}
