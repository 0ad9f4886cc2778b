//! The benchmark experiment matrix: null-response (test-size) designs and
//! signal (power) designs, each crossed with both covariance regimes.
//!
//! Test-size designs draw the response independently of every exposure, from
//! `N(mean, sd^2)`; two families sweep the coefficient of variation, one by
//! varying the mean at fixed deviation and one by varying the deviation at
//! fixed mean. Power designs build the response from the lead and mercury
//! columns with fixed coefficient sets plus `N(0, 2^2)` noise.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::simgen::CovarianceRegime;

/// The five blood metals, in canonical column order.
pub const METALS: [&str; 5] = ["cadmium", "lead", "manganese", "mercury", "selenium"];

/// Canonical column index of lead.
pub const LEAD: usize = 1;

/// Canonical column index of mercury.
pub const MERCURY: usize = 3;

/// Method-1 response means (fixed sd 0.10).
pub const METHOD1_MEANS: [f64; 15] = [
    -4.25, -2.4, -1.9, -1.61, -1.27, -0.70, -0.50, -0.30, -0.223, -0.19, -0.08, -0.05, -0.025,
    -0.01, 0.94,
];

/// Fixed sd used by the Method-1 sweep.
pub const METHOD1_SD: f64 = 0.10;

/// Method-2 response deviations (fixed mean -1.0).
pub const METHOD2_SDS: [f64; 12] = [0.10, 0.25, 0.50, 0.67, 1.0, 1.5, 2.0, 3.5, 5.0, 7.5, 10.0, 15.0];

/// Fixed mean used by the Method-2 sweep.
pub const METHOD2_MEAN: f64 = -1.0;

/// Which CV sweep a test-size design belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum TestSizeMethod {
    /// Varying mean, fixed sd.
    VaryingMean,
    /// Varying sd, fixed mean.
    VaryingSd,
}

/// A null-response design: `y ~ N(mean, sd^2)` independent of the exposures.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TestSizeDesign {
    pub mean: f64,
    pub sd: f64,
    pub method: TestSizeMethod,
}

impl TestSizeDesign {
    pub fn new(mean: f64, sd: f64, method: TestSizeMethod) -> Result<Self> {
        if !(sd > 0.0) || !sd.is_finite() {
            return Err(invalid(format!("test-size design requires sd > 0, got {sd}")));
        }
        if mean == 0.0 {
            return Err(Error::UndefinedCv);
        }
        Ok(TestSizeDesign { mean, sd, method })
    }

    /// `|sd / mean|`.
    pub fn cv(&self) -> f64 {
        crate::math::abs(self.sd / self.mean)
    }
}

/// A signal design built from the lead and mercury columns.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PowerDesign {
    pub name: String,
    pub c_lead: f64,
    pub c_mercury: f64,
    pub c_interaction: f64,
    pub multiplier: f64,
    /// Indices (into [`METALS`]) of the metals the null should be rejected
    /// for.
    pub treated: Vec<usize>,
}

impl PowerDesign {
    /// Noise-free signal value for one observation.
    pub fn signal(&self, lead: f64, mercury: f64) -> f64 {
        self.multiplier
            * (self.c_lead * lead + self.c_mercury * mercury + self.c_interaction * lead * mercury)
    }

    pub fn treated_names(&self) -> Vec<&'static str> {
        self.treated.iter().map(|&i| METALS[i]).collect()
    }
}

/// Zero-mean Gaussian noise added to every signal design.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoiseSpec {
    pub sd: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec { sd: 2.0 }
    }
}

/// One row of the experiment matrix.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExperimentDesign {
    /// Stable design name, e.g. `"Normal High"` or
    /// `"test-size:m2:sd=15.00"`.
    pub name: String,
    pub regime: CovarianceRegime,
    pub kind: DesignKind,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum DesignKind {
    TestSize(TestSizeDesign),
    Power(PowerDesign),
}

impl ExperimentDesign {
    pub fn is_test_size(&self) -> bool {
        matches!(self.kind, DesignKind::TestSize(_))
    }

    /// CV for test-size designs, `None` for power designs.
    pub fn cv(&self) -> Option<f64> {
        match &self.kind {
            DesignKind::TestSize(d) => Some(d.cv()),
            DesignKind::Power(_) => None,
        }
    }

    /// Unique key within the registry.
    pub fn key(&self) -> String {
        format!("{}@{}", self.name, self.regime.as_str())
    }
}

fn power_designs() -> Vec<PowerDesign> {
    let lead_only = |name: &str, c: f64| PowerDesign {
        name: name.to_string(),
        c_lead: c,
        c_mercury: 0.0,
        c_interaction: 0.0,
        multiplier: 1.0,
        treated: vec![LEAD],
    };
    let mercury_only = |name: &str, c: f64| PowerDesign {
        name: name.to_string(),
        c_lead: 0.0,
        c_mercury: c,
        c_interaction: 0.0,
        multiplier: 1.0,
        treated: vec![MERCURY],
    };
    let interaction_only = |name: &str, c: f64| PowerDesign {
        name: name.to_string(),
        c_lead: 0.0,
        c_mercury: 0.0,
        c_interaction: c,
        multiplier: 1.0,
        treated: vec![LEAD, MERCURY],
    };
    let full = |name: &str, cl: f64, cm: f64, ci: f64| PowerDesign {
        name: name.to_string(),
        c_lead: cl,
        c_mercury: cm,
        c_interaction: ci,
        multiplier: 0.5,
        treated: vec![LEAD, MERCURY],
    };
    vec![
        lead_only("Normal Low", -0.03),
        lead_only("Normal Medium", -0.08),
        lead_only("Normal High", -0.12),
        mercury_only("Skewed Low", -0.02),
        mercury_only("Skewed Medium", -0.10),
        mercury_only("Skewed High", -0.15),
        interaction_only("Interaction Low", -0.01),
        interaction_only("Interaction Medium", -0.05),
        interaction_only("Interaction High", -0.10),
        full("Full Factorial Low", -0.03, -0.04, -0.01),
        full("Full Factorial Medium", -0.07, -0.06, -0.03),
        full("Full Factorial High", -0.12, -0.08, -0.05),
    ]
}

/// Builds the complete experiment matrix: every test-size design and every
/// power design, each under both covariance regimes (78 entries).
pub fn build_design_registry() -> Vec<ExperimentDesign> {
    let mut out = Vec::with_capacity(78);
    for regime in [CovarianceRegime::Diagonal, CovarianceRegime::Unstructured] {
        for &mean in METHOD1_MEANS.iter() {
            let d = TestSizeDesign::new(mean, METHOD1_SD, TestSizeMethod::VaryingMean)
                .expect("registry means are nonzero");
            out.push(ExperimentDesign {
                name: format!("test-size:m1:mean={mean}"),
                regime,
                kind: DesignKind::TestSize(d),
            });
        }
        for &sd in METHOD2_SDS.iter() {
            let d = TestSizeDesign::new(METHOD2_MEAN, sd, TestSizeMethod::VaryingSd)
                .expect("registry deviations are positive");
            out.push(ExperimentDesign {
                name: format!("test-size:m2:sd={sd}"),
                regime,
                kind: DesignKind::TestSize(d),
            });
        }
        for p in power_designs() {
            out.push(ExperimentDesign {
                name: p.name.clone(),
                regime,
                kind: DesignKind::Power(p),
            });
        }
    }
    out
}

/// Draws `n` i.i.d. `N(mean, sd^2)` responses, independent of any exposure.
pub fn generate_null_response<R: Rng>(n: usize, design: &TestSizeDesign, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            design.mean + design.sd * z
        })
        .collect()
}

/// Builds the response for a signal design:
/// `y_i = signal(lead_i, mercury_i) + eps_i` with `eps ~ N(0, noise.sd^2)`.
pub fn generate_signal_response<R: Rng>(
    design: &PowerDesign,
    lead: &[f64],
    mercury: &[f64],
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if lead.len() != mercury.len() {
        return Err(invalid(format!(
            "lead column has {} rows, mercury column has {}",
            lead.len(),
            mercury.len()
        )));
    }
    if !(noise.sd > 0.0) {
        return Err(invalid("noise sd must be positive"));
    }
    Ok(lead
        .iter()
        .zip(mercury)
        .map(|(&l, &m)| {
            let eps: f64 = rng.sample(StandardNormal);
            design.signal(l, m) + noise.sd * eps
        })
        .collect())
}

/// `|sd / mean|`; errors when the mean is zero (z-scored responses have no
/// defined CV).
pub fn coefficient_of_variation(mean: f64, sd: f64) -> Result<f64> {
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(invalid(format!("cv requires sd > 0, got {sd}")));
    }
    if mean == 0.0 {
        return Err(Error::UndefinedCv);
    }
    Ok(crate::math::abs(sd / mean))
}
