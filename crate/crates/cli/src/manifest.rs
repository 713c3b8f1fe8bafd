use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct Digest256 {
    pub path: String,
    pub sha256: String,
}

impl Digest256 {
    pub fn of(path: &str, bytes: &[u8]) -> Self {
        Self { path: path.into(), sha256: hex::encode(Sha256::digest(bytes)) }
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub version: String,
    pub seed: u64,
    pub inputs: Vec<Digest256>,
    pub wall_time_ms: u128,
    pub outputs: Vec<Digest256>,
}

pub fn write(path: &Path, manifest: &RunManifest) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(path, text)
}
