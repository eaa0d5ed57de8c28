//! Run manifests: enough provenance (inputs, digests, seeds, versions) to
//! reproduce a run byte-for-byte, timestamp aside.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Result;
use serde::Serialize;

use crate::io;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command_line: Vec<String>,
    /// Input path -> sha256 of its content.
    pub input_digests: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub seeds: Vec<u64>,
    pub timestamp_unix_s: u64,
}

impl RunManifest {
    pub fn collect(inputs: &[&Path], outputs: &[&Path], seeds: &[u64]) -> Result<RunManifest> {
        let mut input_digests = BTreeMap::new();
        for path in inputs {
            let content = io::read(path)?;
            input_digests.insert(path.display().to_string(), io::sha256_hex(&content));
        }
        Ok(RunManifest {
            tool: "cuekit",
            version: env!("CARGO_PKG_VERSION"),
            command_line: std::env::args().collect(),
            input_digests,
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            seeds: seeds.to_vec(),
            timestamp_unix_s: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        io::write(path, &json)
    }
}

/// Writes a manifest when the command asked for one.
pub fn maybe_write(
    manifest_path: &Option<PathBuf>,
    inputs: &[&Path],
    outputs: &[&Path],
    seeds: &[u64],
) -> Result<()> {
    if let Some(path) = manifest_path {
        RunManifest::collect(inputs, outputs, seeds)?.write(path)?;
    }
    Ok(())
}
