//! Run configuration: scale presets, design selection, and the config file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bkmr_core::design::{build_design_registry, ExperimentDesign};
use bkmr_core::simgen::CovarianceRegime;
use serde::{Deserialize, Serialize};

/// Reference stratum split: 1506 female of 2934 total.
pub const FEMALE_FRACTION: f64 = 1506.0 / 2934.0;

/// Scale presets for replicates, sample size, and chain length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// Laptop-sized: 20 replicates, n = 300, 2000 iterations.
    Desk,
    /// Full-sized: 100 replicates, n = 2934, 10000 iterations. A large
    /// multi-core job.
    Paper,
}

impl Scale {
    pub fn replicates(self) -> usize {
        match self {
            Scale::Desk => 20,
            Scale::Paper => 100,
        }
    }

    pub fn sample_n(self) -> usize {
        match self {
            Scale::Desk => 300,
            Scale::Paper => 2934,
        }
    }

    pub fn iterations(self) -> usize {
        match self {
            Scale::Desk => 2000,
            Scale::Paper => 10_000,
        }
    }
}

/// Complete configuration of a `run` invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Design name patterns (`*` wildcard); empty selects every design.
    pub designs: Vec<String>,
    /// Restrict to one covariance regime; `None` keeps both.
    pub regime: Option<CovarianceRegime>,
    pub replicates: usize,
    pub sample_n: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub master_seed: u64,
    /// Worker threads; 0 means all available.
    pub workers: usize,
    pub out_dir: PathBuf,
    /// Detection threshold used for the headline tables.
    pub primary_threshold: f64,
    /// Additional thresholds swept into `threshold_sweep_*.csv`.
    pub threshold_sweep: Vec<f64>,
    /// Reuse one noise vector per replicate across designs.
    pub shared_noise: bool,
    /// Parameter file; `None` uses the bundled defaults.
    pub params_file: Option<PathBuf>,
    /// Persist full chains next to the replicate records.
    pub persist_chains: bool,
}

impl RunConfig {
    pub fn from_scale(scale: Scale, out_dir: PathBuf) -> Self {
        RunConfig {
            designs: Vec::new(),
            regime: None,
            replicates: scale.replicates(),
            sample_n: scale.sample_n(),
            iterations: scale.iterations(),
            burn_in: scale.iterations() / 2,
            master_seed: 0,
            workers: 0,
            out_dir,
            primary_threshold: 0.5,
            threshold_sweep: (1..=9).map(|k| k as f64 / 10.0).collect(),
            shared_noise: false,
            params_file: None,
            persist_chains: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates < 1 {
            bail!("replicates must be at least 1");
        }
        if self.sample_n < 10 {
            bail!("sample size must be at least 10");
        }
        if self.iterations < 100 {
            bail!("iterations must be at least 100");
        }
        if self.burn_in >= self.iterations {
            bail!("burn-in {} must be below iterations {}", self.burn_in, self.iterations);
        }
        if !(self.primary_threshold > 0.0 && self.primary_threshold < 1.0) {
            bail!("detection threshold must lie in (0,1)");
        }
        let selected = self.selected_designs()?;
        if selected.is_empty() {
            bail!("no designs selected");
        }
        Ok(())
    }

    /// Splits `sample_n` into stratum counts at the reference ratio.
    pub fn stratum_counts(&self) -> (usize, usize) {
        let female = (self.sample_n as f64 * FEMALE_FRACTION).round() as usize;
        (female, self.sample_n - female)
    }

    /// Resolves the design selectors against the registry, preserving
    /// registry order. Every pattern must match at least one design.
    pub fn selected_designs(&self) -> Result<Vec<ExperimentDesign>> {
        let registry = build_design_registry();
        let mut out = Vec::new();
        for design in registry {
            if let Some(regime) = self.regime {
                if design.regime != regime {
                    continue;
                }
            }
            if self.designs.is_empty()
                || self.designs.iter().any(|pat| glob_match(pat, &design.name))
            {
                out.push(design);
            }
        }
        for pat in &self.designs {
            if !out.iter().any(|d| glob_match(pat, &d.name)) {
                bail!("design selector {pat:?} matches nothing in the registry");
            }
        }
        Ok(out)
    }
}

/// Minimal `*` wildcard matcher (case-sensitive).
pub fn glob_match(pattern: &str, text: &str) -> bool {
    fn inner(p: &[u8], t: &[u8]) -> bool {
        match p.first() {
            None => t.is_empty(),
            Some(b'*') => inner(&p[1..], t) || (!t.is_empty() && inner(p, &t[1..])),
            Some(&c) => t.first() == Some(&c) && inner(&p[1..], &t[1..]),
        }
    }
    inner(pattern.as_bytes(), text.as_bytes())
}

/// Reads a config file (JSON mirroring [`RunConfig`]).
pub fn read_config(path: &Path) -> Result<RunConfig> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let config: RunConfig =
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    Ok(config)
}

pub fn write_config(path: &Path, config: &RunConfig) -> Result<()> {
    let text = serde_json::to_string_pretty(config)?;
    std::fs::write(path, text.as_bytes())
        .with_context(|| format!("writing config {}", path.display()))?;
    Ok(())
}
