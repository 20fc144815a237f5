//! Reproducibility record written next to every command's outputs: the
//! resolved config snapshot, sha256 hashes of input/output artifacts, and
//! per-stage wall times. Wall times never enter any hashed content.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use fedcl_core::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    /// Canonical key=value snapshot of the resolved config.
    pub config: String,
    /// Relative artifact path → sha256 of the file contents.
    pub artifacts: BTreeMap<String, String>,
    pub stage_wall_times_ms: BTreeMap<String, u64>,
    /// Free-form audit notes, e.g. the policy-purity check result.
    pub notes: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(config_text: &str) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config_text.to_string(),
            artifacts: BTreeMap::new(),
            stage_wall_times_ms: BTreeMap::new(),
            notes: BTreeMap::new(),
        }
    }

    pub fn add_artifact(&mut self, label: &str, path: impl AsRef<Path>) -> Result<()> {
        let digest = sha256_file(path)?;
        self.artifacts.insert(label.to_string(), digest);
        Ok(())
    }

    pub fn record_time(&mut self, stage: &str, millis: u64) {
        self.stage_wall_times_ms.insert(stage.to_string(), millis);
    }

    pub fn note(&mut self, key: &str, value: impl Into<String>) {
        self.notes.insert(key.to_string(), value.into());
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::InvalidConfig(format!("manifest serialization: {e}")))?;
        std::fs::write(path, json).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        serde_json::from_str(&text).map_err(|e| Error::MalformedFile {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }
}

pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(sha256_hex(&bytes))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let artifact = dir.path().join("blob.bin");
        std::fs::write(&artifact, b"payload").unwrap();
        let mut m = RunManifest::new("federation.rounds=3\n");
        m.add_artifact("blob", &artifact).unwrap();
        m.record_time("gen", 12);
        m.note("check", "ok");
        let path = dir.path().join("manifest.json");
        m.write(&path).unwrap();
        let loaded = RunManifest::load(&path).unwrap();
        assert_eq!(loaded.config, m.config);
        assert_eq!(loaded.artifacts, m.artifacts);
        assert_eq!(loaded.notes["check"], "ok");
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(sha256_hex(b""), sha256_hex(b""));
        assert_ne!(sha256_hex(b"a"), sha256_hex(b"b"));
        assert_eq!(sha256_hex(b"abc").len(), 64);
    }
}
