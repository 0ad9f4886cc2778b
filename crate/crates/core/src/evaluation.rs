//! From posterior inclusion probabilities to decisions, rejection rates,
//! confusion rates, and classification metrics.
//!
//! Detection is a strict threshold on the PIP (default 0.5). Rejection rates
//! per metal are replicate frequencies of detection. For a design with a
//! treated-metal set, the true/false positive rates are the means of the
//! per-metal marginal rates over treated and untreated metals respectively,
//! with `fn = 1 - tp` and `tn = 1 - fp`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::design::{DesignKind, ExperimentDesign};
use crate::error::{invalid, Result};
use crate::simgen::CovarianceRegime;

/// Strict PIP threshold rule: detected iff `pip > threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DetectionRule {
    pub pip_threshold: f64,
}

impl DetectionRule {
    pub fn new(pip_threshold: f64) -> Result<Self> {
        if !(pip_threshold > 0.0 && pip_threshold < 1.0) {
            return Err(invalid(format!(
                "detection threshold must lie in (0,1), got {pip_threshold}"
            )));
        }
        Ok(DetectionRule { pip_threshold })
    }
}

impl Default for DetectionRule {
    fn default() -> Self {
        DetectionRule { pip_threshold: 0.5 }
    }
}

/// Applies the detection rule elementwise. PIPs must lie in [0, 1].
pub fn detect(pips: &[f64], rule: &DetectionRule) -> Result<Vec<bool>> {
    for (m, &p) in pips.iter().enumerate() {
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(format!("pip[{m}] = {p} is outside [0, 1]")));
        }
    }
    Ok(pips.iter().map(|&p| p > rule.pip_threshold).collect())
}

/// Per-metal detection frequency over replicates.
///
/// `detections` holds one boolean vector per replicate; all must have the
/// same length.
pub fn rejection_rates(detections: &[Vec<bool>]) -> Result<Vec<f64>> {
    let r = detections.len();
    if r == 0 {
        return Err(invalid("rejection_rates needs at least one replicate"));
    }
    let m = detections[0].len();
    if detections.iter().any(|d| d.len() != m) {
        return Err(invalid("replicates disagree on the number of metals"));
    }
    let mut counts = alloc::vec![0usize; m];
    for rep in detections {
        for (c, &hit) in counts.iter_mut().zip(rep) {
            if hit {
                *c += 1;
            }
        }
    }
    Ok(counts.iter().map(|&c| c as f64 / r as f64).collect())
}

/// True/false positive and negative rates for one design.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfusionRates {
    pub true_positive: f64,
    pub false_positive: f64,
    pub false_negative: f64,
    pub true_negative: f64,
}

/// Aggregates marginal rejection rates into confusion rates.
///
/// `tp` is the mean rate over treated metals, `fp` the mean over untreated
/// metals; `fn = 1 - tp`, `tn = 1 - fp`.
pub fn confusion_from_rates(rates: &[f64], treated: &[usize]) -> Result<ConfusionRates> {
    if treated.is_empty() {
        return Err(invalid("treated set must not be empty"));
    }
    let m = rates.len();
    for &t in treated {
        if t >= m {
            return Err(invalid(format!("treated index {t} out of range for {m} metals")));
        }
    }
    if treated.len() >= m {
        return Err(invalid("at least one metal must be untreated"));
    }
    for (i, &r) in rates.iter().enumerate() {
        if !(0.0..=1.0).contains(&r) {
            return Err(invalid(format!("rate[{i}] = {r} is outside [0, 1]")));
        }
    }
    let is_treated = |i: usize| treated.contains(&i);
    let tp_sum: f64 = treated.iter().map(|&i| rates[i]).sum();
    let tp = tp_sum / treated.len() as f64;
    let untreated = m - treated.len();
    let fp_sum: f64 = (0..m).filter(|&i| !is_treated(i)).map(|i| rates[i]).sum();
    let fp = fp_sum / untreated as f64;
    Ok(ConfusionRates {
        true_positive: tp,
        false_positive: fp,
        false_negative: 1.0 - tp,
        true_negative: 1.0 - fp,
    })
}

/// Classification metrics with zero-denominator flags.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricSet {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when a metric's denominator was zero and the metric was reported
    /// as 0 instead.
    pub zero_denominator: bool,
}

/// Accuracy, precision, recall, and F1 from confusion rates.
///
/// `accuracy = (tp+tn)/(tp+tn+fp+fn)`, `precision = tp/(tp+fp)`,
/// `recall = tp/(tp+fn)`, and F1 is the harmonic mean of precision and
/// recall. Zero denominators yield 0 with the flag set.
pub fn metrics_from_confusion(c: &ConfusionRates) -> MetricSet {
    let mut zero = false;
    let mut ratio = |num: f64, den: f64| {
        if den == 0.0 {
            zero = true;
            0.0
        } else {
            num / den
        }
    };
    let total = c.true_positive + c.true_negative + c.false_positive + c.false_negative;
    let accuracy = ratio(c.true_positive + c.true_negative, total);
    let precision = ratio(c.true_positive, c.true_positive + c.false_positive);
    let recall = ratio(c.true_positive, c.true_positive + c.false_negative);
    let f1 = ratio(2.0 * precision * recall, precision + recall);
    MetricSet {
        accuracy,
        precision,
        recall,
        f1,
        zero_denominator: zero,
    }
}

/// One row of the test-size report.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TestSizeVerdict {
    pub design: String,
    pub regime: CovarianceRegime,
    pub cv: f64,
    pub metal: String,
    pub rate: f64,
    /// `rate <= nominal`: the test size is controlled.
    pub controlled: bool,
}

/// Turns per-design null rejection rates into controlled/uncontrolled
/// verdicts, grouped by regime and sorted by CV.
///
/// Every design must be a test-size design; metal names come from
/// `metal_names`.
pub fn test_size_report(
    rates_per_design: &[(&ExperimentDesign, Vec<f64>)],
    metal_names: &[String],
    nominal: f64,
) -> Result<Vec<TestSizeVerdict>> {
    if !(nominal > 0.0 && nominal < 1.0) {
        return Err(invalid("nominal level must lie in (0,1)"));
    }
    let mut out = Vec::new();
    for (design, rates) in rates_per_design {
        let ts = match &design.kind {
            DesignKind::TestSize(t) => t,
            DesignKind::Power(_) => {
                return Err(invalid(format!(
                    "design {:?} is a power design; test-size report accepts null designs only",
                    design.name
                )))
            }
        };
        if rates.len() != metal_names.len() {
            return Err(invalid("rates do not match the metal names"));
        }
        for (metal, &rate) in metal_names.iter().zip(rates) {
            if !(0.0..=1.0).contains(&rate) {
                return Err(invalid(format!("rate {rate} is outside [0, 1]")));
            }
            out.push(TestSizeVerdict {
                design: design.name.clone(),
                regime: design.regime,
                cv: ts.cv(),
                metal: metal.clone(),
                rate,
                controlled: !(rate > nominal),
            });
        }
    }
    out.sort_by(|a, b| {
        (a.regime.as_str(), a.cv, &a.metal)
            .partial_cmp(&(b.regime.as_str(), b.cv, &b.metal))
            .expect("finite sort keys")
    });
    Ok(out)
}
