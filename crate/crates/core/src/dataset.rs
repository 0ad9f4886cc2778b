//! Exposure datasets: transformed exposure values, optional confounders and
//! response, and a sex stratum per observation.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::linalg::Matrix;

/// Sex stratum label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Stratum {
    Female,
    Male,
}

impl Stratum {
    pub fn as_str(self) -> &'static str {
        match self {
            Stratum::Female => "female",
            Stratum::Male => "male",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "female" | "f" | "F" | "Female" => Ok(Stratum::Female),
            "male" | "m" | "M" | "Male" => Ok(Stratum::Male),
            other => Err(invalid(format!("unknown stratum label {other:?}"))),
        }
    }
}

/// `n` observations of `M` exposure variables with optional confounders and
/// response.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExposureDataset {
    z: Matrix,
    x: Matrix,
    y: Option<Vec<f64>>,
    sex: Vec<Stratum>,
    names: Vec<String>,
}

impl ExposureDataset {
    /// Validates and assembles a dataset.
    ///
    /// Requires `n >= 2`, all entries finite, one name per exposure column,
    /// one stratum per row, and (when present) a response of length `n`.
    pub fn new(
        z: Matrix,
        x: Matrix,
        y: Option<Vec<f64>>,
        sex: Vec<Stratum>,
        names: Vec<String>,
    ) -> Result<Self> {
        let n = z.rows();
        if n < 2 {
            return Err(invalid(format!("dataset needs at least 2 rows, got {n}")));
        }
        if names.len() != z.cols() {
            return Err(invalid(format!(
                "{} exposure names for {} exposure columns",
                names.len(),
                z.cols()
            )));
        }
        if !z.all_finite() {
            return Err(invalid("exposure matrix contains non-finite values"));
        }
        let x = if x.is_empty() { Matrix::zeros(n, 0) } else { x };
        if x.rows() != n && x.cols() > 0 {
            return Err(invalid("confounder row count does not match exposures"));
        }
        if !x.all_finite() {
            return Err(invalid("confounder matrix contains non-finite values"));
        }
        if sex.len() != n {
            return Err(invalid("stratum labels must cover every row"));
        }
        if let Some(resp) = &y {
            if resp.len() != n {
                return Err(invalid(format!(
                    "response length {} does not match {} rows",
                    resp.len(),
                    n
                )));
            }
            if !resp.iter().all(|v| v.is_finite()) {
                return Err(invalid("response contains non-finite values"));
            }
        }
        Ok(ExposureDataset { z, x, y, sex, names })
    }

    pub fn n(&self) -> usize {
        self.z.rows()
    }

    pub fn n_exposures(&self) -> usize {
        self.z.cols()
    }

    pub fn n_confounders(&self) -> usize {
        self.x.cols()
    }

    pub fn exposures(&self) -> &Matrix {
        &self.z
    }

    pub fn confounders(&self) -> &Matrix {
        &self.x
    }

    pub fn response(&self) -> Option<&[f64]> {
        self.y.as_deref()
    }

    pub fn sex(&self) -> &[Stratum] {
        &self.sex
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Index of an exposure by name.
    pub fn exposure_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// One exposure column.
    pub fn exposure_column(&self, m: usize) -> Vec<f64> {
        self.z.column(m)
    }

    /// Returns a copy with the response replaced.
    pub fn with_response(&self, y: Vec<f64>) -> Result<Self> {
        Self::new(
            self.z.clone(),
            self.x.clone(),
            Some(y),
            self.sex.clone(),
            self.names.clone(),
        )
    }

    /// Rows belonging to one stratum.
    pub fn stratum_rows(&self, stratum: Stratum) -> Vec<usize> {
        self.sex
            .iter()
            .enumerate()
            .filter_map(|(i, &s)| (s == stratum).then_some(i))
            .collect()
    }
}
