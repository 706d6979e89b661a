//! Run manifests: what was run, where the outputs live, and how long it took.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::Result;

pub const MANIFEST_FILE: &str = "manifest.json";

/// One seed's (or one cell's) completed outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestRun {
    pub seed: u64,
    /// Output directory, relative to the manifest's directory.
    pub path: String,
    pub wall_seconds: f64,
    /// Environment frames executed.
    pub frames: usize,
}

/// Written atomically at the end of a command into the run root.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    /// SHA-256 of the canonical configuration text.
    pub config_hash: String,
    /// Crate version that produced the outputs.
    pub version: String,
    /// Which subcommand produced this directory.
    pub command: String,
    pub runs: Vec<ManifestRun>,
}

/// Serializes the manifest next to the outputs via a temp-file rename, so a
/// manifest never exists half-written.
pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<()> {
    let path = dir.join(MANIFEST_FILE);
    let tmp = dir.join(format!("{MANIFEST_FILE}.tmp"));
    fs::write(&tmp, serde_json::to_string_pretty(manifest)?)?;
    fs::rename(&tmp, &path)?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    Ok(serde_json::from_str(&text)?)
}
