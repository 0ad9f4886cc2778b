//! `bkmr` command line: ingest exposure data, simulate datasets, fit single
//! models, run replicated studies, and report evaluation tables.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use bkmr_core::dataset::Stratum;
use bkmr_core::design::build_design_registry;
use bkmr_core::sampler::{fit, posterior_inclusion_probabilities, McmcConfig};
use bkmr_core::simgen::{
    compare_samples, estimate_stratum_params, simulate_dataset, transform_exposures,
    CovarianceRegime, SimulationSpec,
};
use bkmr_core::stats;
use clap::{Args, Parser, Subcommand};

use bkmr_harness::config::{read_config, RunConfig, Scale};
use bkmr_harness::csv_io;
use bkmr_harness::params_io;
use bkmr_harness::report;
use bkmr_harness::runner;

#[derive(Parser)]
#[command(
    name = "bkmr",
    version,
    about = "Bayesian kernel machine regression with a replicated simulation-study harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate distribution parameters from a raw exposure CSV.
    Ingest {
        /// CSV with columns cadmium, lead, manganese, mercury, selenium, sex.
        csv: PathBuf,
        /// Output parameter file.
        #[arg(long, default_value = "params.json")]
        out: PathBuf,
    },
    /// Simulate a correlated skewed-gamma exposure dataset.
    Simulate {
        /// Parameter file; defaults to the bundled parameters.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, default_value = "unstructured", value_parser = parse_regime)]
        regime: CovarianceRegime,
        #[arg(long, default_value_t = 1506)]
        n_female: usize,
        #[arg(long, default_value_t = 1428)]
        n_male: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output dataset CSV.
        #[arg(long, default_value = "dataset.csv")]
        out: PathBuf,
    },
    /// Fit the model to one dataset CSV and persist the chain.
    Fit {
        /// Dataset CSV (transformed scale) with a response column.
        data: PathBuf,
        /// Response column name.
        #[arg(long, default_value = "y")]
        response: String,
        #[arg(long, default_value_t = 10_000)]
        iterations: usize,
        /// Defaults to half the iterations.
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "chain.csv")]
        out_chain: PathBuf,
        #[arg(long, default_value = "chain_meta.json")]
        out_meta: PathBuf,
    },
    /// Run a replicated study: simulate, fit, and evaluate designs.
    Run(RunArgs),
    /// Verify a run directory and regenerate its tables.
    Report {
        /// Run output directory.
        #[arg(long)]
        dir: PathBuf,
    },
    /// Export the experiment design registry.
    Registry {
        /// Output JSON path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Base configuration file (JSON); flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Design name or glob (repeatable), e.g. "Normal High" or "test-size:*".
    #[arg(long = "design")]
    designs: Vec<String>,
    /// Restrict to one covariance regime.
    #[arg(long, value_parser = parse_regime)]
    regime: Option<CovarianceRegime>,
    /// Scale preset for replicates, sample size, and chain length.
    #[arg(long, default_value = "desk", value_parser = parse_scale)]
    scale: Scale,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    sample_n: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, env = "BKMR_WORKERS", default_value_t = 0)]
    workers: usize,
    #[arg(long, default_value = "bkmr-out")]
    out: PathBuf,
    /// Detection threshold for the headline tables.
    #[arg(long)]
    threshold: Option<f64>,
    /// Reuse one noise vector per replicate across signal designs.
    #[arg(long)]
    shared_noise: bool,
    /// Parameter file; defaults to the bundled parameters.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Persist full chains (large).
    #[arg(long)]
    persist_chains: bool,
}

fn parse_regime(s: &str) -> Result<CovarianceRegime, String> {
    CovarianceRegime::parse(s).map_err(|e| e.to_string())
}

fn parse_scale(s: &str) -> Result<Scale, String> {
    match s {
        "desk" => Ok(Scale::Desk),
        "paper" => Ok(Scale::Paper),
        other => Err(format!("unknown scale {other:?} (expected desk or paper)")),
    }
}

fn cmd_ingest(csv: &Path, out: &Path) -> Result<()> {
    let raw = csv_io::read_raw_exposures(csv)?;
    let transformed = transform_exposures(&raw.values, None).map_err(|e| anyhow!("{e}"))?;
    let params = estimate_stratum_params(&transformed.values, &raw.sex, &raw.names)
        .map_err(|e| anyhow!("{e}"))?;
    params_io::write_params(out, &params)?;

    println!("parameters written to {}", out.display());
    for (stratum, p) in [(Stratum::Female, &params.female), (Stratum::Male, &params.male)] {
        println!(
            "{} ({} complete cases):",
            stratum.as_str(),
            p.n_stratum
        );
        // Sample skewness from the stratum's complete transformed rows.
        let rows: Vec<usize> = raw
            .sex
            .iter()
            .enumerate()
            .filter_map(|(i, &s)| (s == stratum).then_some(i))
            .collect();
        for (j, name) in params.names.iter().enumerate() {
            let col: Vec<f64> = rows
                .iter()
                .map(|&i| transformed.values[(i, j)])
                .filter(|v| v.is_finite())
                .collect();
            let skew = stats::sample_skewness(&col)
                .map(|s| format!("{s:.3}"))
                .unwrap_or_else(|| "undefined".to_string());
            println!(
                "  {name:<10} mean {:.4}  sd {:.4}  skewness {skew}",
                p.mu[j], p.sigma[j]
            );
        }
        let m = params.names.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..m {
            for j in 0..i {
                let c = p.sigma_u[(i, j)] / (p.sigma[i] * p.sigma[j]);
                lo = lo.min(c);
                hi = hi.max(c);
            }
        }
        println!("  correlation range [{lo:.3}, {hi:.3}]");
    }
    Ok(())
}

fn cmd_simulate(
    params_path: Option<&Path>,
    regime: CovarianceRegime,
    n_female: usize,
    n_male: usize,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let params = params_io::load_params(params_path)?;
    let spec = SimulationSpec {
        regime,
        n_female,
        n_male,
        seed,
    };
    let data = simulate_dataset(&params, &spec).map_err(|e| anyhow!("{e}"))?;
    csv_io::write_dataset(out, &data)?;
    println!(
        "wrote {} rows ({} female, {} male, {} regime) to {}",
        data.n(),
        n_female,
        n_male,
        regime.as_str(),
        out.display()
    );
    let fidelity = compare_samples(&data, &params).map_err(|e| anyhow!("{e}"))?;
    for s in &fidelity.strata {
        println!(
            "{}: covariance discrepancy {:.4} ({}), off-diagonal correlations [{:.3}, {:.3}]",
            s.stratum.as_str(),
            s.covariance_discrepancy,
            if s.covariance_ok { "ok" } else { "above 0.10" },
            s.min_offdiag_corr,
            s.max_offdiag_corr
        );
    }
    for m in &fidelity.metals {
        let skew = m
            .sim_skewness
            .map(|s| format!("{s:.3}"))
            .unwrap_or_else(|| "undefined".to_string());
        println!(
            "{} {:<10} mean err {:.4}  sd err {:.4}  skewness {} (reference {:.3})",
            m.stratum.as_str(),
            m.metal,
            m.mean_rel_err,
            m.sd_rel_err,
            skew,
            m.ref_skewness
        );
    }
    Ok(())
}

fn cmd_fit(
    data_path: &Path,
    response: &str,
    iterations: usize,
    burn_in: Option<usize>,
    seed: u64,
    out_chain: &Path,
    out_meta: &Path,
) -> Result<()> {
    let data = csv_io::read_dataset(data_path, Some(response))?;
    let config = McmcConfig {
        iterations,
        burn_in: burn_in.unwrap_or(iterations / 2),
        seed,
        ..McmcConfig::default()
    };
    let chain = fit(&data, &config).map_err(|e| anyhow!("{e}"))?;
    bkmr_harness::chain_io::write_chain(out_chain, out_meta, &chain)?;
    let pips = posterior_inclusion_probabilities(&chain).map_err(|e| anyhow!("{e}"))?;
    println!("chain written to {} (metadata {})", out_chain.display(), out_meta.display());
    for (name, pip) in chain.names.iter().zip(&pips) {
        println!("  pip {name:<10} {pip:.4}");
    }
    println!(
        "acceptance: lambda {:.2}, birth {:.2}, death {:.2}, refine {:.2}",
        chain.acceptance.lambda_rate(),
        chain.acceptance.birth_rate(),
        chain.acceptance.death_rate(),
        chain.acceptance.refine_rate()
    );
    Ok(())
}

fn build_run_config(args: RunArgs) -> Result<RunConfig> {
    let mut config = match &args.config {
        Some(path) => read_config(path)?,
        None => RunConfig::from_scale(args.scale, args.out.clone()),
    };
    if args.config.is_some() {
        // Flags still override file contents where given.
        if args.out.as_os_str() != "bkmr-out" {
            config.out_dir = args.out.clone();
        }
    } else {
        config.out_dir = args.out.clone();
    }
    if !args.designs.is_empty() {
        config.designs = args.designs;
    }
    if args.regime.is_some() {
        config.regime = args.regime;
    }
    if let Some(r) = args.replicates {
        config.replicates = r;
    }
    if let Some(n) = args.sample_n {
        config.sample_n = n;
    }
    if let Some(it) = args.iterations {
        config.iterations = it;
        config.burn_in = it / 2;
    }
    if let Some(b) = args.burn_in {
        config.burn_in = b;
    }
    config.master_seed = args.seed;
    config.workers = args.workers;
    if let Some(t) = args.threshold {
        config.primary_threshold = t;
    }
    if args.shared_noise {
        config.shared_noise = true;
    }
    if args.params.is_some() {
        config.params_file = args.params;
    }
    if args.persist_chains {
        config.persist_chains = true;
    }
    Ok(config)
}

fn cmd_run(args: RunArgs) -> Result<bool> {
    let config = build_run_config(args)?;
    let outcome = runner::cmd_run(&config)?;
    println!(
        "run complete: {} replicates computed, {} reused, {} failed; results in {}",
        outcome.computed,
        outcome.reused,
        outcome.failures.len(),
        config.out_dir.display()
    );
    for f in &outcome.failures {
        eprintln!(
            "FAILED {} @ {} replicate {} (seed {}): {}",
            f.design, f.regime, f.replicate, f.mcmc_seed, f.error
        );
    }
    Ok(outcome.failures.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<bool> = match cli.command {
        Command::Ingest { csv, out } => cmd_ingest(&csv, &out).map(|()| true),
        Command::Simulate {
            params,
            regime,
            n_female,
            n_male,
            seed,
            out,
        } => cmd_simulate(params.as_deref(), regime, n_female, n_male, seed, &out).map(|()| true),
        Command::Fit {
            data,
            response,
            iterations,
            burn_in,
            seed,
            out_chain,
            out_meta,
        } => cmd_fit(&data, &response, iterations, burn_in, seed, &out_chain, &out_meta)
            .map(|()| true),
        Command::Run(args) => cmd_run(args),
        Command::Report { dir } => report::cmd_report(&dir)
            .map(|files| {
                println!("verified manifest; regenerated {} tables in {}", files.len(), dir.display());
                for f in files {
                    println!("  {f}");
                }
                true
            })
            .context("report failed"),
        Command::Registry { out } => (|| {
            let registry = build_design_registry();
            let text = serde_json::to_string_pretty(&registry)?;
            match out {
                Some(path) => {
                    std::fs::write(&path, text.as_bytes())?;
                    println!("registry ({} designs) written to {}", registry.len(), path.display());
                }
                None => println!("{text}"),
            }
            Ok(true)
        })(),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
