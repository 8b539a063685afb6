//! Run manifests: what ran, with which config and seeds, and what it wrote.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub paths: u64,
    pub risk: u64,
    pub picard: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub config: Config,
    pub seeds: Seeds,
    pub tool_version: String,
    pub wall_time_secs: f64,
    pub outputs: Vec<OutputFile>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    pub fn new(command: Vec<String>, config: &Config, wall_time_secs: f64) -> Self {
        Self {
            command,
            config: config.clone(),
            seeds: Seeds { paths: config.paths.seed, risk: config.risk.seed, picard: config.sde.picard.seed },
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_secs,
            outputs: Vec::new(),
        }
    }

    /// Writes `contents` under `dir` and records its hash.
    pub fn write_output(&mut self, dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf> {
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|source| CliError::Io { path: path.clone(), source })?;
        self.outputs.push(OutputFile { path: name.to_string(), sha256: sha256_hex(contents) });
        Ok(path)
    }

    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").map_err(|source| CliError::Io { path: path.clone(), source })?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Names of recorded outputs whose current contents no longer match.
    pub fn verify(&self, dir: &Path) -> Result<Vec<String>> {
        let mut stale = Vec::new();
        for out in &self.outputs {
            let path = dir.join(&out.path);
            let bytes = std::fs::read(&path).map_err(|source| CliError::Io { path, source })?;
            if sha256_hex(&bytes) != out.sha256 {
                stale.push(out.path.clone());
            }
        }
        Ok(stale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
