//! Run provenance. Every CLI output gets a sibling `<output>.manifest.json`
//! recording the tool version, the full command line, input digests, and
//! output paths. Re-running the recorded command reproduces the outputs
//! byte-for-byte.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Vec<String>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: Vec<String>) -> Self {
        Self {
            tool: "tideprob".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn from_env_args() -> Self {
        Self::new(std::env::args().collect())
    }

    pub fn record_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_hex_file(path)?,
        });
        Ok(())
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Write `<output>.manifest.json` next to an output file.
    pub fn write_alongside(&self, output: &Path) -> Result<PathBuf> {
        let mut name = output.as_os_str().to_os_string();
        name.push(".manifest.json");
        let path = PathBuf::from(name);
        std::fs::write(&path, serde_json::to_string_pretty(self)?)?;
        Ok(path)
    }
}

pub fn sha256_hex_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(sha256_hex(&bytes))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(digest.len() * 2);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}
