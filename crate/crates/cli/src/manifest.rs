use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Provenance record written next to every output file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub params: BTreeMap<String, String>,
    pub config_hash: String,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rng: Option<String>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(command: &str, params: BTreeMap<String, String>, config_hash: String) -> Self {
        RunManifest {
            command: command.to_string(),
            params,
            config_hash,
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: None,
            rng: None,
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn with_seed(mut self, seed: u64, rng: &str) -> Self {
        self.seed = Some(seed);
        self.rng = Some(rng.to_string());
        self
    }

    pub fn sidecar_path(output: &Path) -> PathBuf {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    pub fn write_beside(&self, output: &Path) -> std::io::Result<PathBuf> {
        let path = Self::sidecar_path(output);
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, json + "\n")?;
        Ok(path)
    }
}

/// First 16 hex digits of the SHA-256 of the parameter map and lab config.
pub fn params_hash(params: &BTreeMap<String, String>, config: &cvlab::LabConfig) -> String {
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_vec(params).expect("params serialize"));
    hasher.update(serde_json::to_vec(config).expect("config serializes"));
    hex::encode(&hasher.finalize()[..8])
}
