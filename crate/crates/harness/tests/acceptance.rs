//! Acceptance suite: one test per criterion, each printing a single
//! `ACCEPTANCE <n> <name>: PASS|FAIL` verdict line (visible with
//! `--nocapture`, or automatically for failing criteria).
//!
//! Criteria 5-7 run the full desk-scale pipeline (hours of CPU); the rest
//! finish in seconds to minutes.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use bkmr_core::dataset::{ExposureDataset, Stratum};
use bkmr_core::design::{LEAD, MERCURY, METALS};
use bkmr_core::evaluation::{confusion_from_rates, metrics_from_confusion, ConfusionRates};
use bkmr_core::kernel::gaussian_kernel_matrix;
use bkmr_core::linalg::{Cholesky, Matrix};
use bkmr_core::sampler::{
    fit, posterior_inclusion_probabilities, McmcConfig, PriorSpec, SlabPrior,
};
use bkmr_core::seeding::stream_rng;
use bkmr_core::simgen::{
    gamma_params_from_moments, rmvgamma, simulate_dataset, CovarianceRegime, SimulationSpec,
};
use bkmr_core::special::gamma_cdf;
use bkmr_core::stats;
use bkmr_harness::config::{RunConfig, Scale};
use bkmr_harness::params_io::default_params;
use bkmr_harness::runner;
use rand::Rng;
use rand_distr::StandardNormal;

// ---------------------------------------------------------------------------
// Frozen reference values for the derivation-chain checks. Rates are per
// metal in canonical order (cadmium, lead, manganese, mercury, selenium);
// confusion rows are (tp, fp, fn, tn); metric rows are (accuracy, precision,
// recall, f1). Treated sets: Normal -> lead; Skewed -> mercury; Interaction
// and Full Factorial -> lead and mercury.
// ---------------------------------------------------------------------------

const DESIGN_NAMES: [&str; 12] = [
    "Normal Low",
    "Normal Medium",
    "Normal High",
    "Skewed Low",
    "Skewed Medium",
    "Skewed High",
    "Interaction Low",
    "Interaction Medium",
    "Interaction High",
    "Full Factorial Low",
    "Full Factorial Medium",
    "Full Factorial High",
];

fn treated_for(row: usize) -> &'static [usize] {
    match row {
        0..=2 => &[LEAD],
        3..=5 => &[MERCURY],
        _ => &[LEAD, MERCURY],
    }
}

const REFERENCE_RATES_UNSTRUCTURED: [[f64; 5]; 12] = [
    [0.2, 0.2, 0.3, 0.0, 0.2],
    [0.1, 0.7, 0.1, 0.0, 0.1],
    [0.0, 0.9, 0.1, 0.0, 0.0],
    [0.4, 0.4, 0.4, 0.4, 0.3],
    [0.4, 0.6, 0.5, 0.8, 0.3],
    [0.3, 0.3, 0.3, 0.9, 0.4],
    [0.3, 0.4, 0.4, 0.2, 0.3],
    [0.2, 0.6, 0.2, 1.0, 0.3],
    [0.0, 1.0, 0.1, 1.0, 0.0],
    [0.0, 0.1, 0.1, 0.2, 0.1],
    [0.2, 0.6, 0.3, 0.7, 0.3],
    [0.0, 0.8, 0.1, 1.0, 0.3],
];

const REFERENCE_CONFUSION_UNSTRUCTURED: [[f64; 4]; 12] = [
    [0.2, 0.17, 0.8, 0.82],
    [0.7, 0.12, 0.3, 0.88],
    [0.9, 0.02, 0.1, 0.98],
    [0.21, 0.19, 0.79, 0.81],
    [0.8, 0.45, 0.2, 0.55],
    [0.9, 0.33, 0.1, 0.68],
    [0.38, 0.58, 0.62, 0.42],
    [0.8, 0.24, 0.2, 0.76],
    [0.95, 0.0, 0.05, 1.0],
    [0.6, 0.49, 0.4, 0.51],
    [0.62, 0.37, 0.38, 0.63],
    [0.82, 0.11, 0.18, 0.89],
];

const REFERENCE_METRICS_UNSTRUCTURED: [[f64; 4]; 12] = [
    [0.51, 0.54, 0.20, 0.29],
    [0.79, 0.85, 0.70, 0.77],
    [0.94, 0.98, 0.90, 0.94],
    [0.51, 0.53, 0.21, 0.30],
    [0.68, 0.64, 0.80, 0.71],
    [0.79, 0.73, 0.90, 0.81],
    [0.40, 0.40, 0.38, 0.39],
    [0.78, 0.77, 0.80, 0.78],
    [0.98, 1.00, 0.95, 0.97],
    [0.56, 0.55, 0.60, 0.57],
    [0.63, 0.63, 0.62, 0.62],
    [0.86, 0.88, 0.82, 0.85],
];

const REFERENCE_RATES_DIAGONAL: [[f64; 5]; 12] = [
    [0.5, 0.52, 0.39, 0.47, 0.43],
    [0.54, 0.5, 0.41, 0.5, 0.4],
    [0.55, 0.61, 0.37, 0.51, 0.41],
    [0.53, 0.53, 0.48, 0.55, 0.49],
    [0.59, 0.56, 0.5, 0.62, 0.51],
    [0.5, 0.51, 0.35, 0.59, 0.4],
    [0.56, 0.57, 0.45, 0.53, 0.46],
    [0.65, 0.66, 0.61, 0.64, 0.57],
    [0.55, 0.56, 0.47, 0.59, 0.47],
    [0.46, 0.5, 0.4, 0.44, 0.39],
    [0.63, 0.66, 0.53, 0.62, 0.56],
    [0.43, 0.46, 0.32, 0.43, 0.35],
];

const REFERENCE_CONFUSION_DIAGONAL: [[f64; 4]; 12] = [
    [0.52, 0.45, 0.48, 0.55],
    [0.50, 0.46, 0.50, 0.54],
    [0.61, 0.46, 0.39, 0.54],
    [0.55, 0.51, 0.45, 0.49],
    [0.62, 0.54, 0.38, 0.46],
    [0.59, 0.44, 0.41, 0.56],
    [0.55, 0.49, 0.45, 0.51],
    [0.65, 0.61, 0.35, 0.39],
    [0.58, 0.50, 0.43, 0.50],
    [0.47, 0.42, 0.53, 0.58],
    [0.64, 0.57, 0.36, 0.43],
    [0.45, 0.37, 0.56, 0.63],
];

const REFERENCE_METRICS_DIAGONAL: [[f64; 4]; 12] = [
    [0.54, 0.54, 0.52, 0.53],
    [0.52, 0.52, 0.50, 0.51],
    [0.58, 0.57, 0.61, 0.59],
    [0.52, 0.52, 0.55, 0.53],
    [0.54, 0.53, 0.62, 0.57],
    [0.58, 0.57, 0.59, 0.58],
    [0.53, 0.53, 0.55, 0.54],
    [0.52, 0.52, 0.65, 0.58],
    [0.54, 0.54, 0.58, 0.56],
    [0.53, 0.53, 0.47, 0.50],
    [0.53, 0.53, 0.64, 0.58],
    [0.54, 0.55, 0.45, 0.49],
];

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

fn verdict(criterion: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion} {name}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "acceptance criterion {criterion} ({name}) failed: {detail}");
}

fn within(actual: f64, expected: f64, tol: f64) -> bool {
    (actual - expected).abs() <= tol + 1e-12
}

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("bkmr-acceptance").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn metrics_tuple(m: &bkmr_core::evaluation::MetricSet) -> [f64; 4] {
    [m.accuracy, m.precision, m.recall, m.f1]
}

fn confusion_tuple(c: &ConfusionRates) -> [f64; 4] {
    [c.true_positive, c.false_positive, c.false_negative, c.true_negative]
}

/// Reads a CSV table into (header, rows-of-strings).
fn read_table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    (header, rows)
}

// ---------------------------------------------------------------------------
// Criterion 1: evaluation-chain exactness.
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_evaluation_chain_exactness() {
    let mut failures = Vec::new();

    // Reference confusion rows -> metrics, per design (strong-correlation
    // regime).
    for (i, name) in DESIGN_NAMES.iter().enumerate() {
        let [tp, fp, fn_, tn] = REFERENCE_CONFUSION_UNSTRUCTURED[i];
        let metrics = metrics_from_confusion(&ConfusionRates {
            true_positive: tp,
            false_positive: fp,
            false_negative: fn_,
            true_negative: tn,
        });
        let got = metrics_tuple(&metrics);
        for (k, (g, e)) in got.iter().zip(REFERENCE_METRICS_UNSTRUCTURED[i]).enumerate() {
            if !within(*g, e, 0.01) {
                failures.push(format!("{name} metric[{k}] {g:.4} vs {e}"));
            }
        }
    }

    // Reference rate rows -> confusion -> metrics (independent-exposure
    // regime), checked at both stages.
    for (i, name) in DESIGN_NAMES.iter().enumerate() {
        let confusion =
            confusion_from_rates(&REFERENCE_RATES_DIAGONAL[i], treated_for(i)).unwrap();
        let got_c = confusion_tuple(&confusion);
        for (k, (g, e)) in got_c.iter().zip(REFERENCE_CONFUSION_DIAGONAL[i]).enumerate() {
            if !within(*g, e, 0.01) {
                failures.push(format!("{name} confusion[{k}] {g:.4} vs {e}"));
            }
        }
        let metrics = metrics_from_confusion(&confusion);
        let got_m = metrics_tuple(&metrics);
        for (k, (g, e)) in got_m.iter().zip(REFERENCE_METRICS_DIAGONAL[i]).enumerate() {
            if !within(*g, e, 0.01) {
                failures.push(format!("{name} metric[{k}] {g:.4} vs {e}"));
            }
        }
    }

    verdict(
        1,
        "evaluation-chain exactness",
        failures.is_empty(),
        &if failures.is_empty() {
            "all 24 reference rows reproduced within ±0.01 per cell".to_string()
        } else {
            format!("{} cell mismatches: {}", failures.len(), failures.join("; "))
        },
    );
}

// ---------------------------------------------------------------------------
// Criterion 2: single-treated power-chain exactness.
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_single_treated_power_chain() {
    // The single-treated (Normal/Skewed) rows of the strong-correlation
    // reference: marginal rates aggregated by mean-over-marginals against
    // the published confusion rows, ±0.01 per cell.
    let mut row_reports = Vec::new();
    let mut all_pass = true;
    for i in 0..6 {
        let confusion =
            confusion_from_rates(&REFERENCE_RATES_UNSTRUCTURED[i], treated_for(i)).unwrap();
        let got = confusion_tuple(&confusion);
        let expected = REFERENCE_CONFUSION_UNSTRUCTURED[i];
        let ok = got.iter().zip(expected).all(|(g, e)| within(*g, e, 0.01));
        all_pass &= ok;
        row_reports.push(format!(
            "{}: {} (derived tp/fp/fn/tn {:.3}/{:.3}/{:.3}/{:.3} vs reference {:?})",
            DESIGN_NAMES[i],
            if ok { "ok" } else { "MISMATCH" },
            got[0],
            got[1],
            got[2],
            got[3],
            expected
        ));
    }
    for line in &row_reports {
        println!("  {line}");
    }
    verdict(
        2,
        "single-treated power-chain exactness",
        all_pass,
        &format!(
            "{} of 6 single-treated rows reproduce within ±0.01; \
             the reference rate matrix prints one decimal (aggregation error up to 0.05) \
             and two rows are internally inconsistent with the reference confusion rows \
             under any marginal aggregation",
            row_reports.iter().filter(|r| r.contains(": ok")).count()
        ),
    );
}

// ---------------------------------------------------------------------------
// Criterion 3: sampler correctness against oracles.
// ---------------------------------------------------------------------------

fn synthetic_names(m: usize) -> Vec<String> {
    (0..m).map(|i| format!("z{i}")).collect()
}

#[test]
fn criterion_3_sampler_vs_oracles() {
    // (a) Conjugate subcase: lambda = 0, selection off; posterior means of
    // beta and sigma2 against the closed form within 3 Monte Carlo standard
    // errors at 1e4 kept draws.
    let n = 60;
    let p = 2;
    let mut rng = stream_rng(3101, &[0]);
    let mut z_rows = Vec::with_capacity(n);
    let mut x_rows = Vec::with_capacity(n);
    for _ in 0..n {
        z_rows.push(vec![rng.gen::<f64>() * 3.0, rng.gen::<f64>() * 3.0]);
        x_rows.push(vec![1.0, rng.gen::<f64>() * 2.0 - 1.0]);
    }
    let z = Matrix::from_rows(&z_rows).unwrap();
    let x = Matrix::from_rows(&x_rows).unwrap();
    let y: Vec<f64> = (0..n)
        .map(|i| 0.9 - 1.1 * x[(i, 1)] + 0.7 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let data = ExposureDataset::new(
        z,
        x.clone(),
        Some(y.clone()),
        vec![Stratum::Female; n],
        synthetic_names(2),
    )
    .unwrap();
    let priors = PriorSpec {
        sigma2_shape: 2.0,
        sigma2_rate: 2.0,
        ..PriorSpec::default()
    };
    let config = McmcConfig {
        iterations: 12_000,
        burn_in: 2_000,
        seed: 404,
        fixed_lambda: Some(0.0),
        update_components: false,
        priors,
        ..McmcConfig::default()
    };
    let chain = fit(&data, &config).unwrap();
    let kept = chain.kept();
    assert_eq!(kept.len(), 10_000);

    let beta_hat = bkmr_core::linalg::least_squares(&x, &y).unwrap();
    let fitted = x.matvec(&beta_hat);
    let rss: f64 = y.iter().zip(&fitted).map(|(a, b)| (a - b) * (a - b)).sum();
    let a_post = priors.sigma2_shape + (n - p) as f64 / 2.0;
    let sigma2_expected = (priors.sigma2_rate + rss / 2.0) / (a_post - 1.0);

    let mut conjugate_ok = true;
    let mut detail_a = Vec::new();
    for j in 0..p {
        let draws: Vec<f64> = kept.iter().map(|r| r.beta[j]).collect();
        let mean = stats::mean(&draws);
        let se = stats::mc_standard_error(&draws);
        let ok = (mean - beta_hat[j]).abs() < 3.0 * se;
        conjugate_ok &= ok;
        detail_a.push(format!("beta[{j}] {mean:.4} vs {:.4} (3se {:.4})", beta_hat[j], 3.0 * se));
    }
    let sigma_draws: Vec<f64> = kept.iter().map(|r| r.sigma2).collect();
    let sigma_mean = stats::mean(&sigma_draws);
    let sigma_se = stats::mc_standard_error(&sigma_draws);
    conjugate_ok &= (sigma_mean - sigma2_expected).abs() < 3.0 * sigma_se;
    detail_a.push(format!(
        "sigma2 {sigma_mean:.4} vs {sigma2_expected:.4} (3se {:.4})",
        3.0 * sigma_se
    ));

    // (b) Two-exposure, n = 30 instance against exhaustive quadrature over
    // (delta, r, lambda) with sigma2 marginalized analytically; PIPs within
    // ±0.05.
    let n2 = 30;
    let mut rng = stream_rng(3102, &[0]);
    let z_rows: Vec<Vec<f64>> = (0..n2)
        .map(|_| vec![rng.gen::<f64>() * 3.0, rng.gen::<f64>() * 3.0])
        .collect();
    let z = Matrix::from_rows(&z_rows).unwrap();
    let y: Vec<f64> = (0..n2)
        .map(|i| 0.35 * z[(i, 0)] + rng.sample::<f64, _>(StandardNormal))
        .collect();
    let data = ExposureDataset::new(
        z.clone(),
        Matrix::zeros(n2, 0),
        Some(y.clone()),
        vec![Stratum::Female; n2],
        synthetic_names(2),
    )
    .unwrap();
    let lambda_max = 20.0;
    let slab_max = 50.0;
    let priors = PriorSpec {
        sigma2_shape: 2.0,
        sigma2_rate: 2.0,
        lambda_max,
        slab: SlabPrior::InverseUniform { max: slab_max },
        inclusion_prob: 0.5,
    };
    let config = McmcConfig {
        iterations: 150_000,
        burn_in: 30_000,
        seed: 515,
        proposal_sd_lambda: 0.8,
        proposal_sd_r: 0.5,
        priors,
        ..McmcConfig::default()
    };
    let chain = fit(&data, &config).unwrap();
    let pips = posterior_inclusion_probabilities(&chain).unwrap();

    // Quadrature: sigma2-marginalized weight on (r grid via u = 1/r, lambda
    // grid), averaged over the uniform priors.
    let log_weight = |r: &[f64], lambda: f64| -> f64 {
        let k = gaussian_kernel_matrix(&z, r).unwrap();
        let mut v = Matrix::zeros(n2, n2);
        for i in 0..n2 {
            for j in 0..n2 {
                v[(i, j)] = lambda * k[(i, j)];
            }
            v[(i, i)] += 1.0;
        }
        let chol = Cholesky::decompose_with_jitter(&v, 1e-10).unwrap();
        let w = chol.forward_solve(&y);
        let q: f64 = w.iter().map(|x| x * x).sum();
        -0.5 * chol.log_det()
            - (priors.sigma2_shape + n2 as f64 / 2.0) * (priors.sigma2_rate + q / 2.0).ln()
    };
    let g_l = 100usize;
    let g_u = 80usize;
    let lambdas: Vec<f64> = (0..g_l).map(|i| (i as f64 + 0.5) * lambda_max / g_l as f64).collect();
    let us: Vec<f64> = (0..g_u).map(|i| (i as f64 + 0.5) * slab_max / g_u as f64).collect();

    let mut logs: Vec<(usize, f64)> = Vec::new(); // (state id, log weight)
    for &l in &lambdas {
        logs.push((0, log_weight(&[0.0, 0.0], l)));
    }
    for &u in &us {
        for &l in &lambdas {
            logs.push((1, log_weight(&[1.0 / u, 0.0], l)));
            logs.push((2, log_weight(&[0.0, 1.0 / u], l)));
        }
    }
    for &u1 in &us {
        for &u2 in &us {
            for &l in &lambdas {
                logs.push((3, log_weight(&[1.0 / u1, 1.0 / u2], l)));
            }
        }
    }
    let max_log = logs.iter().map(|(_, w)| *w).fold(f64::NEG_INFINITY, f64::max);
    let mut sums = [0.0f64; 4];
    let mut counts = [0usize; 4];
    for (state, w) in &logs {
        sums[*state] += (w - max_log).exp();
        counts[*state] += 1;
    }
    let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, c)| s / *c as f64).collect();
    // Prior state weights with pi0 = 0.5 are equal, so they cancel.
    let total: f64 = means.iter().sum();
    let oracle_pip0 = (means[1] + means[3]) / total;
    let oracle_pip1 = (means[2] + means[3]) / total;
    assert!(
        oracle_pip0 > 0.05 && oracle_pip0 < 0.95,
        "oracle pip0 {oracle_pip0} too extreme to be informative"
    );

    let grid_ok =
        (pips[0] - oracle_pip0).abs() <= 0.05 && (pips[1] - oracle_pip1).abs() <= 0.05;
    let detail_b = format!(
        "grid oracle pips ({oracle_pip0:.4}, {oracle_pip1:.4}) vs chain ({:.4}, {:.4})",
        pips[0], pips[1]
    );

    verdict(
        3,
        "sampler correctness vs oracles",
        conjugate_ok && grid_ok,
        &format!("conjugate: {}; quadrature: {detail_b}", detail_a.join(", ")),
    );
}

// ---------------------------------------------------------------------------
// Criterion 4: copula sampler fidelity.
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_copula_fidelity() {
    let params = default_params();
    let p = &params.female;
    let corr = stats::correlation_from_covariance(&p.sigma_u).unwrap();

    // Exact gamma marginals at n = 1e4 (fixed seed): per-column KS p > 0.01.
    let mut rng = stream_rng(41, &[0]);
    let draws = rmvgamma(10_000, &p.shape, &p.rate, &corr, &mut rng).unwrap();
    let mut ks_ok = true;
    let mut ks_detail = Vec::new();
    for j in 0..p.shape.len() {
        let col = draws.column(j);
        let (d, pv) = stats::ks_test(&col, |v| gamma_cdf(p.shape[j], p.rate[j], v).unwrap()).unwrap();
        ks_ok &= pv > 0.01;
        ks_detail.push(format!("{} d={d:.4} p={pv:.3}", METALS[j]));
    }

    // Realized correlation within ±0.05 of each target at n = 1e5.
    let mut rng = stream_rng(41, &[1]);
    let big = rmvgamma(100_000, &p.shape, &p.rate, &corr, &mut rng).unwrap();
    let mut corr_ok = true;
    let mut worst: (f64, String) = (0.0, String::new());
    for i in 0..5 {
        for j in 0..i {
            let r = stats::pearson(&big.column(i), &big.column(j)).unwrap();
            let err = (r - corr[(i, j)]).abs();
            if err > worst.0 {
                worst = (err, format!("{}-{} realized {r:.4} target {:.2}", METALS[i], METALS[j], corr[(i, j)]));
            }
            corr_ok &= err <= 0.05;
        }
    }

    // Gamma moment matching round-trips exactly (1e-12).
    let mut rng = stream_rng(41, &[2]);
    let mut moment_ok = true;
    for _ in 0..200 {
        let mean = 0.1 + rng.gen::<f64>() * 5.0;
        let sd = 0.1 + rng.gen::<f64>() * 2.0;
        let (shape, rate) = gamma_params_from_moments(mean, sd).unwrap();
        moment_ok &= (shape / rate - mean).abs() < 1e-12 * mean.max(1.0);
        moment_ok &= (shape / (rate * rate) - sd * sd).abs() < 1e-12 * (sd * sd).max(1.0);
    }

    verdict(
        4,
        "copula sampler fidelity",
        ks_ok && corr_ok && moment_ok,
        &format!(
            "KS per column [{}]; worst correlation error {}; moment round-trip {}",
            ks_detail.join(", "),
            worst.1,
            if moment_ok { "exact" } else { "FAILED" }
        ),
    );
}

// ---------------------------------------------------------------------------
// Criteria 5 and 6 share five desk-scale power runs.
// ---------------------------------------------------------------------------

const POWER_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

fn desk_power_runs() -> &'static Vec<PathBuf> {
    static RUNS: OnceLock<Vec<PathBuf>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let mut dirs = Vec::new();
        for &seed in &POWER_SEEDS {
            let dir = scratch_dir(&format!("power-seed-{seed}"));
            let mut config = RunConfig::from_scale(Scale::Desk, dir.clone());
            config.designs = vec!["Normal High".into(), "Skewed High".into()];
            config.regime = Some(CovarianceRegime::Unstructured);
            config.master_seed = seed;
            config.workers = 0;
            let outcome = runner::cmd_run(&config).unwrap();
            assert!(outcome.failures.is_empty(), "replicate failures at seed {seed}");
            dirs.push(dir);
        }
        dirs
    })
}

fn rates_row(dir: &Path, design: &str) -> [f64; 5] {
    let (header, rows) = read_table(&dir.join("tables/rejection_rates_unstructured.csv"));
    assert_eq!(header[0], "design");
    let row = rows
        .iter()
        .find(|r| r[0] == design)
        .unwrap_or_else(|| panic!("design {design} missing from rates table"));
    let mut out = [0.0; 5];
    for k in 0..5 {
        out[k] = row[k + 1].parse().unwrap();
    }
    out
}

fn confusion_row(dir: &Path, design: &str) -> [f64; 4] {
    let (_, rows) = read_table(&dir.join("tables/confusion_unstructured.csv"));
    let row = rows
        .iter()
        .find(|r| r[0] == design)
        .unwrap_or_else(|| panic!("design {design} missing from confusion table"));
    let mut out = [0.0; 4];
    for k in 0..4 {
        out[k] = row[k + 1].parse().unwrap();
    }
    out
}

#[test]
fn criterion_5_desk_power_ordering() {
    let runs = desk_power_runs();
    let mut seed_pass = 0;
    let mut details = Vec::new();
    for (dir, seed) in runs.iter().zip(POWER_SEEDS) {
        let mut seed_ok = true;
        for (design, treated) in [("Normal High", LEAD), ("Skewed High", MERCURY)] {
            let rates = rates_row(dir, design);
            let treated_rate = rates[treated];
            let ordering = (0..5)
                .filter(|&m| m != treated)
                .all(|m| treated_rate > rates[m]);
            let above_half = treated_rate > 0.5;
            seed_ok &= ordering && above_half;
            details.push(format!(
                "seed {seed} {design}: rates {rates:?} treated {treated_rate} ordering={ordering} above0.5={above_half}"
            ));
        }
        if seed_ok {
            seed_pass += 1;
        }
    }
    for d in &details {
        println!("  {d}");
    }
    verdict(
        5,
        "desk-scale power ordering",
        seed_pass * 5 >= 4 * POWER_SEEDS.len(),
        &format!(
            "{seed_pass} of {} master seeds satisfy strict treated-metal ordering AND \
             treated rate > 0.5 for both signal designs",
            POWER_SEEDS.len()
        ),
    );
}

#[test]
fn criterion_6_skewness_inflation_direction() {
    let runs = desk_power_runs();
    let mut fp_normal = 0.0;
    let mut fp_skewed = 0.0;
    for dir in runs {
        fp_normal += confusion_row(dir, "Normal High")[1];
        fp_skewed += confusion_row(dir, "Skewed High")[1];
    }
    fp_normal /= runs.len() as f64;
    fp_skewed /= runs.len() as f64;
    verdict(
        6,
        "skewness-inflation direction",
        fp_skewed > fp_normal,
        &format!(
            "mean false-positive rate over {} seeds: skewed-signal {fp_skewed:.4} vs \
             normal-signal {fp_normal:.4}",
            runs.len()
        ),
    );
}

// ---------------------------------------------------------------------------
// Desk-scale sampler behavior examples (not numbered criteria).
// ---------------------------------------------------------------------------

/// With a pure-noise response independent of every exposure, PIPs stay below
/// the 0.5 threshold in the large majority of seeded desk-scale runs.
#[test]
fn desk_example_null_pips_below_threshold() {
    let params = default_params();
    let mut runs_clean = 0;
    let seeds = 20;
    for seed in 0..seeds {
        let spec = SimulationSpec {
            regime: CovarianceRegime::Unstructured,
            n_female: 154,
            n_male: 146,
            seed: 600 + seed,
        };
        let ds = simulate_dataset(&params, &spec).unwrap();
        let mut rng = stream_rng(700 + seed, &[]);
        let y: Vec<f64> = (0..ds.n())
            .map(|_| 0.1 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let data = ds.with_response(y).unwrap();
        let config = McmcConfig::with_iterations(2000, 800 + seed);
        let chain = fit(&data, &config).unwrap();
        let pips = posterior_inclusion_probabilities(&chain).unwrap();
        if pips.iter().all(|&p| p < 0.5) {
            runs_clean += 1;
        }
    }
    println!("  pure-noise desk runs with all PIPs below 0.5: {runs_clean}/{seeds}");
    assert!(
        runs_clean * 10 >= seeds * 8,
        "only {runs_clean} of {seeds} pure-noise runs kept every PIP below 0.5"
    );
}

/// Under the strong lead signal, the treated metal's PIP tops every
/// untreated metal's PIP in at least 80% of 20 seeded desk-scale runs
/// (reusing the criterion-5 replicate records for master seed 1).
#[test]
fn desk_example_pip_ordering_normal_high() {
    let runs = desk_power_runs();
    let dir = &runs[0];
    let mut ordered = 0;
    let mut total = 0;
    for replicate in 0..20 {
        let path = dir
            .join("replicates")
            .join("normal-high-unstructured")
            .join(format!("r{replicate:04}.json"));
        let record: bkmr_harness::runner::ReplicateRecord =
            serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        total += 1;
        let lead_pip = record.pips[LEAD];
        if (0..5).filter(|&m| m != LEAD).all(|m| lead_pip > record.pips[m]) {
            ordered += 1;
        }
    }
    println!("  lead PIP strictly top in {ordered}/{total} desk replicates");
    assert!(
        ordered * 10 >= total * 8,
        "lead PIP was the strict maximum in only {ordered} of {total} runs"
    );
}

// ---------------------------------------------------------------------------
// Criterion 7: desk-scale test-size trend over the CV sweep.
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_test_size_trend() {
    let dir = scratch_dir("test-size-trend");
    let mut config = RunConfig::from_scale(Scale::Desk, dir.clone());
    config.designs = vec![
        "test-size:m2:sd=0.1".into(),
        "test-size:m2:sd=1".into(),
        "test-size:m2:sd=5".into(),
        "test-size:m2:sd=15".into(),
    ];
    config.regime = Some(CovarianceRegime::Diagonal);
    config.master_seed = 1;
    let outcome = runner::cmd_run(&config).unwrap();
    assert!(outcome.failures.is_empty());

    let (_, rows) = read_table(&dir.join("tables/test_size_diagonal.csv"));
    let rate_of = |design: &str, metal: &str| -> f64 {
        rows.iter()
            .find(|r| r[0] == design && r[2] == metal)
            .unwrap_or_else(|| panic!("missing {design}/{metal}"))[3]
            .parse()
            .unwrap()
    };
    let mut pass = true;
    let mut details = Vec::new();
    for metal in METALS {
        let low_cv = rate_of("test-size:m2:sd=0.1", metal);
        let high_cv = rate_of("test-size:m2:sd=15", metal);
        let ok = high_cv > low_cv && low_cv <= 0.15;
        pass &= ok;
        details.push(format!("{metal}: rate(cv=0.1)={low_cv} rate(cv=15)={high_cv} {}", if ok { "ok" } else { "VIOLATION" }));
    }
    for d in &details {
        println!("  {d}");
    }
    verdict(
        7,
        "desk-scale test-size trend",
        pass,
        &format!("per-metal null rejection rates at cv=15 vs cv=0.1: {}", details.join("; ")),
    );
}

// ---------------------------------------------------------------------------
// Criterion 8: simulated-data fidelity under the bundled defaults.
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_default_data_fidelity() {
    let params = default_params();
    // Skewness band and ordering on an unstructured draw of 1e4 rows.
    let spec = SimulationSpec {
        regime: CovarianceRegime::Unstructured,
        n_female: 5_000,
        n_male: 5_000,
        seed: 808,
    };
    let ds = simulate_dataset(&params, &spec).unwrap();
    let mut skews = Vec::new();
    let mut band_ok = true;
    for j in 0..5 {
        let skew = stats::sample_skewness(&ds.exposure_column(j)).unwrap();
        band_ok &= (0.006..=1.54).contains(&skew);
        skews.push(format!("{} {skew:.3}", METALS[j]));
    }
    let lead_skew = stats::sample_skewness(&ds.exposure_column(LEAD)).unwrap();
    let mercury_skew = stats::sample_skewness(&ds.exposure_column(MERCURY)).unwrap();
    let ordering_ok = mercury_skew > lead_skew;

    // Independence in the diagonal regime at the 3/sqrt(n) band.
    let spec = SimulationSpec {
        regime: CovarianceRegime::Diagonal,
        n_female: 5_000,
        n_male: 5_000,
        seed: 809,
    };
    let ds = simulate_dataset(&params, &spec).unwrap();
    let bound = 3.0 / (ds.n() as f64).sqrt();
    let mut corr_ok = true;
    let mut worst = 0.0f64;
    for i in 0..5 {
        for j in 0..i {
            let r = stats::pearson(&ds.exposure_column(i), &ds.exposure_column(j)).unwrap();
            worst = worst.max(r.abs());
            corr_ok &= r.abs() <= bound;
        }
    }

    verdict(
        8,
        "simulated-data fidelity",
        band_ok && ordering_ok && corr_ok,
        &format!(
            "skewness [{}] (mercury {mercury_skew:.3} > lead {lead_skew:.3}: {ordering_ok}); \
             diagonal max |corr| {worst:.4} vs bound {bound:.4}",
            skews.join(", ")
        ),
    );
}

// ---------------------------------------------------------------------------
// Criterion 9: determinism and resume.
// ---------------------------------------------------------------------------

#[test]
fn criterion_9_determinism_and_resume() {
    // Reduced two-design configuration keeps this inside minutes; the
    // properties under test (byte determinism, worker invariance, resume
    // equivalence) are configuration-independent.
    let base = scratch_dir("determinism");
    let make_config = |dir: &Path, workers: usize| {
        let mut config = RunConfig::from_scale(Scale::Desk, dir.to_path_buf());
        config.designs = vec!["Normal High".into(), "test-size:m2:sd=1".into()];
        config.regime = Some(CovarianceRegime::Unstructured);
        config.replicates = 3;
        config.sample_n = 60;
        config.iterations = 400;
        config.burn_in = 200;
        config.master_seed = 99;
        config.workers = workers;
        config
    };

    let gather = |dir: &Path| -> Vec<(String, Vec<u8>)> {
        fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
            for entry in fs::read_dir(dir).unwrap() {
                let path = entry.unwrap().path();
                if path.is_dir() {
                    walk(root, &path, out);
                } else {
                    let rel = path.strip_prefix(root).unwrap().to_string_lossy().to_string();
                    if rel != "manifest.json" {
                        out.push((rel, fs::read(&path).unwrap()));
                    }
                }
            }
        }
        let mut out = Vec::new();
        walk(dir, dir, &mut out);
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    };

    // Rerun with different worker counts.
    let dir_a = base.join("a");
    let dir_b = base.join("b");
    runner::cmd_run(&make_config(&dir_a, 1)).unwrap();
    runner::cmd_run(&make_config(&dir_b, 2)).unwrap();
    let files_a = gather(&dir_a);
    let files_b = gather(&dir_b);
    let rerun_identical = files_a == files_b;

    // Interrupted run: keep only the first replicate record, then resume.
    let dir_c = base.join("c");
    runner::cmd_run(&make_config(&dir_c, 2)).unwrap();
    let keep = dir_c
        .join("replicates")
        .join("normal-high-unstructured")
        .join("r0000.json");
    let kept_bytes = fs::read(&keep).unwrap();
    fs::remove_dir_all(dir_c.join("tables")).unwrap();
    fs::remove_file(dir_c.join("manifest.json")).unwrap();
    fs::remove_file(dir_c.join("registry.json")).unwrap();
    for entry in fs::read_dir(dir_c.join("replicates")).unwrap() {
        let design_dir = entry.unwrap().path();
        for file in fs::read_dir(&design_dir).unwrap() {
            let path = file.unwrap().path();
            if path != keep {
                fs::remove_file(path).unwrap();
            }
        }
    }
    let outcome = runner::cmd_run(&make_config(&dir_c, 1)).unwrap();
    let resumed_reused = outcome.reused == 1;
    assert_eq!(fs::read(&keep).unwrap(), kept_bytes, "resume must not rewrite records");
    let files_c = gather(&dir_c);
    let resume_identical = files_a == files_c;

    verdict(
        9,
        "determinism and resume",
        rerun_identical && resume_identical && resumed_reused,
        &format!(
            "worker-count invariance: {rerun_identical}; kill-resume equivalence: \
             {resume_identical} (reused {} records)",
            outcome.reused
        ),
    );
}
