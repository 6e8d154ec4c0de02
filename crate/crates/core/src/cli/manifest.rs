use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Written as `manifest.json` by every subcommand. Two runs whose manifests
/// agree apart from `timestamp` produce byte-identical data files.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub options: serde_json::Value,
    /// SHA-256 of the input file, hex encoded.
    pub input_sha256: Option<String>,
    pub seed: Option<u64>,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub warnings: Vec<String>,
}

impl RunManifest {
    pub fn new<T: Serialize>(
        subcommand: &str,
        options: &T,
        input_sha256: Option<String>,
        seed: Option<u64>,
        warnings: Vec<String>,
    ) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            options: serde_json::to_value(options).expect("options serialize"),
            input_sha256,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            warnings,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(path.display().to_string(), e))
    }
}

pub(crate) fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
