//! Evaluation tables: per-regime rejection rates, confusion rates,
//! classification metrics, test-size verdicts, CV plot data, and the
//! threshold sweep.

use std::path::Path;

use anyhow::{anyhow, bail, Result};
use bkmr_core::design::{DesignKind, ExperimentDesign, METALS};
use bkmr_core::evaluation::{
    confusion_from_rates, detect, metrics_from_confusion, rejection_rates, test_size_report,
    DetectionRule,
};
use bkmr_core::simgen::CovarianceRegime;

use crate::config::RunConfig;
use crate::csv_io::write_table;
use crate::manifest::RunManifest;
use crate::runner::{load_records, ReplicateRecord};

const REGIMES: [CovarianceRegime; 2] = [CovarianceRegime::Diagonal, CovarianceRegime::Unstructured];

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Marginal rejection rates for one design at a threshold.
fn rates_at(records: &[ReplicateRecord], threshold: f64) -> Result<Vec<f64>> {
    let rule = DetectionRule::new(threshold).map_err(|e| anyhow!("{e}"))?;
    let detections: Vec<Vec<bool>> = records
        .iter()
        .map(|r| detect(&r.pips, &rule).map_err(|e| anyhow!("{e}")))
        .collect::<Result<_>>()?;
    rejection_rates(&detections).map_err(|e| anyhow!("{e}"))
}

/// Builds and writes every table family; returns the relative paths written.
pub fn write_tables(
    out_dir: &Path,
    config: &RunConfig,
    all_records: &[(ExperimentDesign, Vec<ReplicateRecord>)],
) -> Result<Vec<String>> {
    let mut written = Vec::new();
    let metal_names: Vec<String> = METALS.iter().map(|s| s.to_string()).collect();

    for regime in REGIMES {
        let regime_str = regime.as_str();
        let in_regime: Vec<&(ExperimentDesign, Vec<ReplicateRecord>)> = all_records
            .iter()
            .filter(|(d, recs)| d.regime == regime && !recs.is_empty())
            .collect();
        if in_regime.is_empty() {
            continue;
        }

        // Power-design families: rejection rates, confusion, metrics.
        let power: Vec<_> = in_regime.iter().filter(|(d, _)| !d.is_test_size()).collect();
        if !power.is_empty() {
            let mut rate_rows = Vec::new();
            let mut confusion_rows = Vec::new();
            let mut metric_rows = Vec::new();
            for (design, records) in power.iter().map(|p| &**p) {
                let rates = rates_at(records, config.primary_threshold)?;
                let mut row = vec![design.name.clone()];
                row.extend(rates.iter().map(|r| fmt(*r)));
                rate_rows.push(row);

                let treated = match &design.kind {
                    DesignKind::Power(p) => p.treated.clone(),
                    _ => unreachable!("power designs only"),
                };
                let confusion = confusion_from_rates(&rates, &treated).map_err(|e| anyhow!("{e}"))?;
                confusion_rows.push(vec![
                    design.name.clone(),
                    fmt(confusion.true_positive),
                    fmt(confusion.false_positive),
                    fmt(confusion.false_negative),
                    fmt(confusion.true_negative),
                ]);
                let metrics = metrics_from_confusion(&confusion);
                metric_rows.push(vec![
                    design.name.clone(),
                    fmt(metrics.accuracy),
                    fmt(metrics.precision),
                    fmt(metrics.recall),
                    fmt(metrics.f1),
                ]);
            }
            let rates_file = format!("tables/rejection_rates_{regime_str}.csv");
            write_table(
                &out_dir.join(&rates_file),
                &["design", "cadmium", "lead", "manganese", "mercury", "selenium"],
                &rate_rows,
            )?;
            written.push(rates_file);

            let confusion_file = format!("tables/confusion_{regime_str}.csv");
            write_table(
                &out_dir.join(&confusion_file),
                &["design", "true_positive", "false_positive", "false_negative", "true_negative"],
                &confusion_rows,
            )?;
            written.push(confusion_file);

            let metrics_file = format!("tables/metrics_{regime_str}.csv");
            write_table(
                &out_dir.join(&metrics_file),
                &["design", "accuracy", "precision", "recall", "f1"],
                &metric_rows,
            )?;
            written.push(metrics_file);
        }

        // Test-size family: verdicts plus the CV plot data.
        let test_size: Vec<_> = in_regime.iter().filter(|(d, _)| d.is_test_size()).collect();
        if !test_size.is_empty() {
            let mut with_rates = Vec::new();
            for (design, records) in test_size.iter().map(|p| &**p) {
                with_rates.push((design, rates_at(records, config.primary_threshold)?));
            }
            let borrowed: Vec<(&ExperimentDesign, Vec<f64>)> =
                with_rates.iter().map(|(d, r)| (*d, r.clone())).collect();
            let verdicts =
                test_size_report(&borrowed, &metal_names, 0.05).map_err(|e| anyhow!("{e}"))?;

            let ts_file = format!("tables/test_size_{regime_str}.csv");
            let ts_rows: Vec<Vec<String>> = verdicts
                .iter()
                .map(|v| {
                    vec![
                        v.design.clone(),
                        fmt(v.cv),
                        v.metal.clone(),
                        fmt(v.rate),
                        if v.controlled { "controlled" } else { "uncontrolled" }.to_string(),
                    ]
                })
                .collect();
            write_table(
                &out_dir.join(&ts_file),
                &["design", "cv", "metal", "rate", "verdict"],
                &ts_rows,
            )?;
            written.push(ts_file);

            let cv_file = format!("tables/cv_curve_{regime_str}.csv");
            let cv_rows: Vec<Vec<String>> = verdicts
                .iter()
                .map(|v| vec![fmt(v.cv), v.metal.clone(), regime_str.to_string(), fmt(v.rate)])
                .collect();
            write_table(&out_dir.join(&cv_file), &["cv", "metal", "regime", "rate"], &cv_rows)?;
            written.push(cv_file);
        }

        // Threshold sweep over every design in the regime.
        if !config.threshold_sweep.is_empty() {
            let mut sweep_rows = Vec::new();
            for (design, records) in in_regime.iter().map(|p| &**p) {
                for &threshold in &config.threshold_sweep {
                    let rates = rates_at(records, threshold)?;
                    for (metal, rate) in metal_names.iter().zip(&rates) {
                        sweep_rows.push(vec![
                            fmt(threshold),
                            design.name.clone(),
                            metal.clone(),
                            fmt(*rate),
                        ]);
                    }
                }
            }
            let sweep_file = format!("tables/threshold_sweep_{regime_str}.csv");
            write_table(
                &out_dir.join(&sweep_file),
                &["threshold", "design", "metal", "rate"],
                &sweep_rows,
            )?;
            written.push(sweep_file);
        }
    }
    Ok(written)
}

/// Verifies a completed run directory against its manifest and regenerates
/// the tables from the persisted replicate records.
pub fn cmd_report(out_dir: &Path) -> Result<Vec<String>> {
    let manifest = RunManifest::read(out_dir)?;
    manifest.verify_files(out_dir)?;
    let mut config = manifest.config.clone();
    config.out_dir = out_dir.to_path_buf();
    let records = load_records(out_dir, &config)?;
    if records.iter().all(|(_, recs)| recs.is_empty()) {
        bail!("run directory {} holds no replicate records", out_dir.display());
    }
    write_tables(out_dir, &config, &records)
}
