//! Replicated execution: generate dataset, generate response, fit, summarize
//! — one work item per (design, replicate), in parallel, with deterministic
//! per-item seeding so results do not depend on worker count or scheduling.
//! Completed replicates persist as JSON records and are skipped on resume.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use bkmr_core::dataset::ExposureDataset;
use bkmr_core::design::{
    generate_null_response, generate_signal_response, DesignKind, ExperimentDesign, NoiseSpec,
    LEAD, MERCURY,
};
use bkmr_core::sampler::{fit, posterior_inclusion_probabilities, AcceptanceStats, McmcConfig};
use bkmr_core::seeding::{fnv1a64, mix_seed};
use bkmr_core::simgen::{simulate_dataset, CovarianceRegime, SimulationSpec, StratumParamsPair};
use bkmr_core::stats;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::manifest::{
    checksum_file, DesignStatus, FailureRecord, RunManifest, MANIFEST_NAME,
};
use crate::params_io;
use crate::report;

/// Summary of one completed replicate; the unit of persistence and resume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub design: String,
    pub regime: String,
    pub replicate: usize,
    pub exposure_seed: u64,
    pub response_seed: u64,
    pub mcmc_seed: u64,
    pub metals: Vec<String>,
    pub pips: Vec<f64>,
    pub acceptance: AcceptanceStats,
    pub sigma2_mean: f64,
    pub lambda_mean: f64,
}

/// Filesystem-safe identifier for a design/regime pair.
pub fn design_slug(design: &ExperimentDesign) -> String {
    let mut slug = String::new();
    for c in design.key().chars() {
        if c.is_ascii_alphanumeric() {
            slug.push(c.to_ascii_lowercase());
        } else {
            slug.push('-');
        }
    }
    slug
}

fn regime_component(regime: CovarianceRegime) -> u64 {
    fnv1a64(regime.as_str().as_bytes())
}

fn design_component(design: &ExperimentDesign) -> u64 {
    fnv1a64(design.key().as_bytes())
}

/// Stream seeds for one (design, replicate) work item.
#[derive(Debug, Clone, Copy)]
pub struct ItemSeeds {
    pub exposure: u64,
    pub response: u64,
    pub mcmc: u64,
}

/// Derives the three per-item streams. Exposure data depend only on
/// (regime, replicate), so every design in a regime sees the same simulated
/// datasets, mirroring a shared pool of replicated samples. The response
/// stream is design-specific unless noise sharing is enabled.
pub fn item_seeds(config: &RunConfig, design: &ExperimentDesign, replicate: usize) -> ItemSeeds {
    let master = config.master_seed;
    let regime = regime_component(design.regime);
    let dhash = design_component(design);
    let rep = replicate as u64;
    let exposure = mix_seed(master, &[fnv1a64(b"exposure"), regime, rep]);
    let response = if config.shared_noise && !design.is_test_size() {
        mix_seed(master, &[fnv1a64(b"response"), regime, rep])
    } else {
        mix_seed(master, &[fnv1a64(b"response"), dhash, rep])
    };
    let mcmc = mix_seed(master, &[fnv1a64(b"mcmc"), dhash, rep]);
    ItemSeeds {
        exposure,
        response,
        mcmc,
    }
}

/// Builds the simulated dataset and response for one work item.
pub fn build_item_dataset(
    config: &RunConfig,
    params: &StratumParamsPair,
    design: &ExperimentDesign,
    replicate: usize,
) -> Result<(ExposureDataset, ItemSeeds)> {
    let seeds = item_seeds(config, design, replicate);
    let (n_female, n_male) = config.stratum_counts();
    let spec = SimulationSpec {
        regime: design.regime,
        n_female,
        n_male,
        seed: seeds.exposure,
    };
    let exposures = simulate_dataset(params, &spec).map_err(|e| anyhow!("{e}"))?;
    let mut rng = bkmr_core::seeding::stream_rng(seeds.response, &[]);
    let y = match &design.kind {
        DesignKind::TestSize(t) => generate_null_response(exposures.n(), t, &mut rng),
        DesignKind::Power(p) => {
            let lead = exposures.exposure_column(LEAD);
            let mercury = exposures.exposure_column(MERCURY);
            generate_signal_response(p, &lead, &mercury, &NoiseSpec::default(), &mut rng)
                .map_err(|e| anyhow!("{e}"))?
        }
    };
    let data = exposures.with_response(y).map_err(|e| anyhow!("{e}"))?;
    Ok((data, seeds))
}

fn mcmc_config(config: &RunConfig, seed: u64) -> McmcConfig {
    McmcConfig {
        iterations: config.iterations,
        burn_in: config.burn_in,
        seed,
        ..McmcConfig::default()
    }
}

/// Runs one work item end to end.
fn run_item(
    config: &RunConfig,
    params: &StratumParamsPair,
    design: &ExperimentDesign,
    replicate: usize,
    chain_paths: Option<(&Path, &Path)>,
) -> Result<ReplicateRecord> {
    let (data, seeds) = build_item_dataset(config, params, design, replicate)?;
    let chain = fit(&data, &mcmc_config(config, seeds.mcmc)).map_err(|e| anyhow!("{e}"))?;
    let pips = posterior_inclusion_probabilities(&chain).map_err(|e| anyhow!("{e}"))?;
    let kept = chain.kept();
    let sigma2_mean = stats::mean(&kept.iter().map(|r| r.sigma2).collect::<Vec<_>>());
    let lambda_mean = stats::mean(&kept.iter().map(|r| r.lambda).collect::<Vec<_>>());
    if let Some((csv, meta)) = chain_paths {
        crate::chain_io::write_chain(csv, meta, &chain)?;
    }
    Ok(ReplicateRecord {
        design: design.name.clone(),
        regime: design.regime.as_str().to_string(),
        replicate,
        exposure_seed: seeds.exposure,
        response_seed: seeds.response,
        mcmc_seed: seeds.mcmc,
        metals: data.names().to_vec(),
        pips,
        acceptance: chain.acceptance,
        sigma2_mean,
        lambda_mean,
    })
}

fn replicate_path(out_dir: &Path, slug: &str, replicate: usize) -> PathBuf {
    out_dir
        .join("replicates")
        .join(slug)
        .join(format!("r{replicate:04}.json"))
}

fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let parent = path.parent().expect("replicate paths have parents");
    fs::create_dir_all(parent)?;
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, serde_json::to_string_pretty(value)?.as_bytes())?;
    fs::rename(&tmp, path).with_context(|| format!("committing {}", path.display()))?;
    Ok(())
}

/// Configuration fingerprint for resume compatibility: everything that can
/// change results (worker count and output location excluded).
fn config_fingerprint(config: &RunConfig) -> String {
    let mut c = config.clone();
    c.workers = 0;
    c.out_dir = PathBuf::new();
    serde_json::to_string(&c).expect("config serializes")
}

/// Outcome counts of a run.
#[derive(Debug)]
pub struct RunOutcome {
    pub computed: usize,
    pub reused: usize,
    pub failures: Vec<FailureRecord>,
}

/// Executes the full pipeline for `config`: all selected designs times all
/// replicates, then evaluation tables and the manifest.
///
/// Already-completed replicate records found in the output directory are
/// reused verbatim, which makes interrupted runs resumable; the final
/// aggregation always reads back the persisted records, so a resumed run
/// produces byte-identical outputs.
pub fn cmd_run(config: &RunConfig) -> Result<RunOutcome> {
    config.validate().map_err(|e| anyhow!("{e}"))?;
    let params = params_io::load_params(config.params_file.as_deref())?;
    if params.names.len() != bkmr_core::design::METALS.len() {
        bail!("parameter file must describe the five-metal panel");
    }
    let designs = config.selected_designs().map_err(|e| anyhow!("{e}"))?;
    let out_dir = &config.out_dir;
    fs::create_dir_all(out_dir)?;

    // Refuse to mix results of incompatible configurations.
    if out_dir.join(MANIFEST_NAME).exists() {
        let previous = RunManifest::read(out_dir)?;
        if config_fingerprint(&previous.config) != config_fingerprint(config) {
            bail!(
                "output directory {} holds results for a different configuration; \
                 use a fresh directory",
                out_dir.display()
            );
        }
    }

    let workers = if config.workers == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        config.workers
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("building worker pool")?;

    // Work items that still need computing.
    struct Item<'a> {
        design: &'a ExperimentDesign,
        slug: String,
        replicate: usize,
        path: PathBuf,
    }
    let mut pending = Vec::new();
    let mut reused = 0usize;
    for design in &designs {
        let slug = design_slug(design);
        for replicate in 0..config.replicates {
            let path = replicate_path(out_dir, &slug, replicate);
            if path.exists() {
                match fs::read_to_string(&path)
                    .ok()
                    .and_then(|t| serde_json::from_str::<ReplicateRecord>(&t).ok())
                {
                    Some(_) => {
                        reused += 1;
                        continue;
                    }
                    None => {
                        // Corrupt leftover; recompute.
                        let _ = fs::remove_file(&path);
                    }
                }
            }
            pending.push(Item {
                design,
                slug: slug.clone(),
                replicate,
                path,
            });
        }
    }

    // Each worker persists its record as soon as the item finishes, so a
    // killed run keeps everything completed up to that point.
    let results: Vec<(usize, u64, Result<()>)> = pool.install(|| {
        pending
            .par_iter()
            .enumerate()
            .map(|(idx, item)| {
                let chain_csv;
                let chain_meta;
                let chain_paths = if config.persist_chains {
                    let dir = out_dir.join("replicates").join(&item.slug);
                    let _ = fs::create_dir_all(&dir);
                    chain_csv = dir.join(format!("r{:04}_chain.csv", item.replicate));
                    chain_meta = dir.join(format!("r{:04}_chain_meta.json", item.replicate));
                    Some((chain_csv.as_path(), chain_meta.as_path()))
                } else {
                    None
                };
                let started = Instant::now();
                let result = run_item(config, &params, item.design, item.replicate, chain_paths)
                    .and_then(|record| write_json_atomic(&item.path, &record));
                (idx, started.elapsed().as_millis() as u64, result)
            })
            .collect()
    });

    let mut failures = Vec::new();
    let mut computed = 0usize;
    let mut elapsed_by_design: std::collections::HashMap<String, u64> =
        std::collections::HashMap::new();
    for (idx, elapsed_ms, result) in results {
        let item = &pending[idx];
        *elapsed_by_design.entry(item.design.key()).or_default() += elapsed_ms;
        match result {
            Ok(()) => {
                computed += 1;
            }
            Err(e) => {
                let seeds = item_seeds(config, item.design, item.replicate);
                failures.push(FailureRecord {
                    design: item.design.name.clone(),
                    regime: item.design.regime.as_str().to_string(),
                    replicate: item.replicate,
                    mcmc_seed: seeds.mcmc,
                    error: format!("{e}"),
                });
            }
        }
    }

    // Aggregate from the persisted records so resumed and fresh runs agree
    // byte for byte.
    let mut all_records = Vec::new();
    let mut statuses = Vec::new();
    for design in &designs {
        let slug = design_slug(design);
        let mut completed = 0usize;
        let mut design_records = Vec::new();
        for replicate in 0..config.replicates {
            let path = replicate_path(out_dir, &slug, replicate);
            if !path.exists() {
                continue;
            }
            let text = fs::read_to_string(&path)?;
            let record: ReplicateRecord = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()))?;
            completed += 1;
            design_records.push(record);
        }
        statuses.push(DesignStatus {
            design: design.name.clone(),
            regime: design.regime.as_str().to_string(),
            completed_replicates: completed,
            failed_replicates: config.replicates - completed,
            elapsed_ms: elapsed_by_design.get(&design.key()).copied().unwrap_or(0),
        });
        all_records.push((design.clone(), design_records));
    }

    // Registry echo and evaluation tables.
    let registry_path = out_dir.join("registry.json");
    fs::write(
        &registry_path,
        serde_json::to_string_pretty(&designs)?.as_bytes(),
    )?;
    let table_files = report::write_tables(out_dir, config, &all_records)?;

    // Manifest: checksum every result file (replicates, chains, registry,
    // tables).
    let mut files = std::collections::BTreeMap::new();
    for design in &designs {
        let slug = design_slug(design);
        for replicate in 0..config.replicates {
            let path = replicate_path(out_dir, &slug, replicate);
            if path.exists() {
                let rel = format!("replicates/{slug}/r{replicate:04}.json");
                files.insert(rel, checksum_file(&path)?);
            }
            if config.persist_chains {
                for suffix in ["chain.csv", "chain_meta.json"] {
                    let rel = format!("replicates/{slug}/r{replicate:04}_{suffix}");
                    let path = out_dir.join(&rel);
                    if path.exists() {
                        files.insert(rel, checksum_file(&path)?);
                    }
                }
            }
        }
    }
    files.insert("registry.json".to_string(), checksum_file(&registry_path)?);
    for rel in &table_files {
        files.insert(rel.clone(), checksum_file(&out_dir.join(rel))?);
    }

    let manifest = RunManifest {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        designs: statuses,
        failures: failures.clone(),
        files,
    };
    manifest.write(out_dir)?;

    Ok(RunOutcome {
        computed,
        reused,
        failures,
    })
}

/// Reads every persisted replicate record for the manifest's design set.
pub fn load_records(
    out_dir: &Path,
    config: &RunConfig,
) -> Result<Vec<(ExperimentDesign, Vec<ReplicateRecord>)>> {
    let designs = config.selected_designs().map_err(|e| anyhow!("{e}"))?;
    let mut all = Vec::new();
    for design in designs {
        let slug = design_slug(&design);
        let mut records = Vec::new();
        for replicate in 0..config.replicates {
            let path = replicate_path(out_dir, &slug, replicate);
            if !path.exists() {
                continue;
            }
            let text = fs::read_to_string(&path)?;
            records.push(serde_json::from_str::<ReplicateRecord>(&text).with_context(|| {
                format!("parsing replicate record {}", path.display())
            })?);
        }
        all.push((design, records));
    }
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Scale;

    fn tiny_config(dir: &Path) -> RunConfig {
        let mut c = RunConfig::from_scale(Scale::Desk, dir.to_path_buf());
        c.designs = vec!["Normal High".into()];
        c.regime = Some(CovarianceRegime::Unstructured);
        c.replicates = 2;
        c.sample_n = 40;
        c.iterations = 150;
        c.burn_in = 50;
        c.master_seed = 11;
        c.workers = 2;
        c
    }

    #[test]
    fn seeds_are_design_and_replicate_specific() {
        let dir = std::env::temp_dir().join("bkmr-runner-seeds");
        let config = tiny_config(&dir);
        let designs = bkmr_core::design::build_design_registry();
        let a = &designs[0];
        let b = &designs[1];
        let s_a0 = item_seeds(&config, a, 0);
        let s_a1 = item_seeds(&config, a, 1);
        let s_b0 = item_seeds(&config, b, 0);
        assert_ne!(s_a0.mcmc, s_a1.mcmc);
        assert_ne!(s_a0.mcmc, s_b0.mcmc);
        // Same regime and replicate share the exposure stream across designs.
        assert_eq!(s_a0.exposure, s_b0.exposure);
    }

    #[test]
    fn shared_noise_unifies_power_response_streams() {
        let dir = std::env::temp_dir().join("bkmr-runner-noise");
        let mut config = tiny_config(&dir);
        let registry = bkmr_core::design::build_design_registry();
        let normal_high = registry
            .iter()
            .find(|d| d.name == "Normal High" && d.regime == CovarianceRegime::Unstructured)
            .unwrap();
        let skewed_high = registry
            .iter()
            .find(|d| d.name == "Skewed High" && d.regime == CovarianceRegime::Unstructured)
            .unwrap();
        config.shared_noise = false;
        assert_ne!(
            item_seeds(&config, normal_high, 3).response,
            item_seeds(&config, skewed_high, 3).response
        );
        config.shared_noise = true;
        assert_eq!(
            item_seeds(&config, normal_high, 3).response,
            item_seeds(&config, skewed_high, 3).response
        );
    }

    #[test]
    fn run_resume_and_worker_invariance() {
        let base = std::env::temp_dir().join("bkmr-runner-run");
        let _ = fs::remove_dir_all(&base);

        // Full run with 2 workers.
        let dir_a = base.join("a");
        let mut config_a = tiny_config(&dir_a);
        config_a.workers = 2;
        let outcome = cmd_run(&config_a).unwrap();
        assert_eq!(outcome.computed, 2);
        assert!(outcome.failures.is_empty());

        // Same run with 1 worker in a fresh directory.
        let dir_b = base.join("b");
        let mut config_b = tiny_config(&dir_b);
        config_b.workers = 1;
        cmd_run(&config_b).unwrap();

        let rec_a = fs::read_to_string(dir_a.join("replicates").join("normal-high-unstructured").join("r0000.json")).unwrap();
        let rec_b = fs::read_to_string(dir_b.join("replicates").join("normal-high-unstructured").join("r0000.json")).unwrap();
        assert_eq!(rec_a, rec_b);

        // Resume: delete a replicate and the manifest-noted tables rebuild
        // identically.
        let victim = dir_a
            .join("replicates")
            .join("normal-high-unstructured")
            .join("r0001.json");
        let original = fs::read_to_string(&victim).unwrap();
        fs::remove_file(&victim).unwrap();
        let outcome = cmd_run(&config_a).unwrap();
        assert_eq!(outcome.computed, 1);
        assert_eq!(outcome.reused, 1);
        assert_eq!(fs::read_to_string(&victim).unwrap(), original);
    }

    #[test]
    fn run_rejects_incompatible_resume() {
        let dir = std::env::temp_dir().join("bkmr-runner-incompat");
        let _ = fs::remove_dir_all(&dir);
        let config = tiny_config(&dir);
        cmd_run(&config).unwrap();
        let mut other = config.clone();
        other.master_seed += 1;
        let err = cmd_run(&other).unwrap_err();
        assert!(format!("{err}").contains("different configuration"));
        // Worker count is not part of the fingerprint.
        let mut more_workers = config.clone();
        more_workers.workers = 1;
        cmd_run(&more_workers).unwrap();
    }
}
