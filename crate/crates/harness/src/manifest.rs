//! The run manifest: config echo, per-design status, and file checksums.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

/// FNV-1a over a byte stream; used for output integrity checks.
pub fn checksum_bytes(bytes: &[u8]) -> String {
    format!("{:016x}", bkmr_core::seeding::fnv1a64(bytes))
}

pub fn checksum_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(checksum_bytes(&bytes))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignStatus {
    pub design: String,
    pub regime: String,
    pub completed_replicates: usize,
    pub failed_replicates: usize,
    /// Wall-clock cost of the replicates computed in this invocation.
    /// Excluded from determinism comparisons.
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FailureRecord {
    pub design: String,
    pub regime: String,
    pub replicate: usize,
    pub mcmc_seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub config: RunConfig,
    pub designs: Vec<DesignStatus>,
    pub failures: Vec<FailureRecord>,
    /// Relative path -> FNV-1a checksum of every result file.
    pub files: BTreeMap<String, String>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

impl RunManifest {
    pub fn write(&self, out_dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(out_dir.join(MANIFEST_NAME), text.as_bytes())
            .with_context(|| format!("writing manifest in {}", out_dir.display()))?;
        Ok(())
    }

    pub fn read(out_dir: &Path) -> Result<Self> {
        let path = out_dir.join(MANIFEST_NAME);
        let text =
            fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let manifest: RunManifest =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok(manifest)
    }

    /// Verifies every checksummed file; any mismatch is an error naming the
    /// offending path.
    pub fn verify_files(&self, out_dir: &Path) -> Result<()> {
        for (rel, expected) in &self.files {
            let path = out_dir.join(rel);
            let actual = checksum_file(&path)?;
            if actual != *expected {
                bail!(
                    "manifest mismatch: {} has checksum {actual}, manifest records {expected}",
                    path.display()
                );
            }
        }
        Ok(())
    }
}
