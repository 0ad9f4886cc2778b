//! Distribution-parameter files (JSON) and the bundled defaults.
//!
//! The bundled defaults describe a five-metal blood exposure panel on the
//! transformed (log10, unit-deviation) scale: per-metal skewness spans
//! roughly 0.5 to 1.4 with lead near 0.62 and mercury near 1.28, pairwise
//! correlations lie in [0.02, 0.34], and the stratum sizes are 1506 female /
//! 1428 male. They allow every pipeline command to run without any input
//! data; `ingest` replaces them with estimates from a real CSV.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use bkmr_core::simgen::StratumParamsPair;

/// The bundled default parameters, embedded at compile time.
pub const DEFAULT_PARAMS_JSON: &str = include_str!("../data/default_params.json");

/// Parses and validates the bundled defaults.
pub fn default_params() -> StratumParamsPair {
    let params: StratumParamsPair =
        serde_json::from_str(DEFAULT_PARAMS_JSON).expect("bundled parameter file parses");
    params.validate().expect("bundled parameter file is valid");
    params
}

/// Reads a parameter file, validating its invariants.
pub fn read_params(path: &Path) -> Result<StratumParamsPair> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading parameter file {}", path.display()))?;
    let params: StratumParamsPair = serde_json::from_str(&text)
        .with_context(|| format!("parsing parameter file {}", path.display()))?;
    params
        .validate()
        .with_context(|| format!("validating parameter file {}", path.display()))?;
    Ok(params)
}

/// Writes a parameter file; the JSON round-trips every f64 exactly.
pub fn write_params(path: &Path, params: &StratumParamsPair) -> Result<()> {
    let text = serde_json::to_string_pretty(params)?;
    fs::write(path, text.as_bytes())
        .with_context(|| format!("writing parameter file {}", path.display()))?;
    Ok(())
}

/// Loads either the given file or the bundled defaults.
pub fn load_params(path: Option<&Path>) -> Result<StratumParamsPair> {
    match path {
        Some(p) => read_params(p),
        None => Ok(default_params()),
    }
}
