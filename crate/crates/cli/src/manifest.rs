//! Run manifest: config echo plus a hash of every artifact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub threads: usize,
    pub config: BTreeMap<String, String>,
    pub artifacts: Vec<ArtifactEntry>,
    pub flags: BTreeMap<String, bool>,
    pub passed: bool,
    /// Zero unless timings were requested, so reruns stay byte-identical.
    pub wall_ms: f64,
}

pub fn sha256_hex(data: &[u8]) -> String {
    let digest = Sha256::digest(data);
    let mut s = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(s, "{b:02x}");
    }
    s
}

pub fn entry(path: &str, data: &[u8]) -> ArtifactEntry {
    ArtifactEntry { path: path.to_string(), sha256: sha256_hex(data), bytes: data.len() }
}

impl RunManifest {
    /// Names of listed files that are missing under `dir` or whose hash changed.
    pub fn verify(&self, dir: &Path) -> Vec<String> {
        self.artifacts
            .iter()
            .filter(|a| match std::fs::read(dir.join(&a.path)) {
                Ok(d) => sha256_hex(&d) != a.sha256,
                Err(_) => true,
            })
            .map(|a| a.path.clone())
            .collect()
    }

    pub fn load(dir: &Path) -> Result<RunManifest, CliError> {
        let path = dir.join(MANIFEST_NAME);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io { path, source: e })?;
        Ok(serde_json::from_str(&text)?)
    }
}
