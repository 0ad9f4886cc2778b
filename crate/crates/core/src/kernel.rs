//! The componentwise Gaussian kernel
//! `K_ij = exp(-sum_m r_m (z_im - z_jm)^2)`.
//!
//! Each exposure has its own nonnegative weight `r_m`; setting `r_m = 0`
//! removes component `m` from the kernel, which is what the spike-and-slab
//! inclusion indicators act on.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::linalg::{Matrix, PackedStrictLower};
use crate::math;

/// Kernel weights paired with their inclusion indicators.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KernelWeights {
    r: Vec<f64>,
    delta: Vec<bool>,
}

impl KernelWeights {
    /// All components excluded (`r = 0`, `delta = 0`).
    pub fn all_excluded(m: usize) -> Self {
        KernelWeights {
            r: vec![0.0; m],
            delta: vec![false; m],
        }
    }

    /// Validates `r_m >= 0` and `delta_m = 0 => r_m = 0`.
    pub fn new(r: Vec<f64>, delta: Vec<bool>) -> Result<Self> {
        if r.len() != delta.len() {
            return Err(invalid("kernel weights and indicators differ in length"));
        }
        for (m, (&rm, &dm)) in r.iter().zip(&delta).enumerate() {
            if !rm.is_finite() || rm < 0.0 {
                return Err(invalid(format!("kernel weight r[{m}] = {rm} must be >= 0")));
            }
            if !dm && rm != 0.0 {
                return Err(invalid(format!(
                    "component {m} is excluded but has nonzero weight {rm}"
                )));
            }
        }
        Ok(KernelWeights { r, delta })
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn delta(&self) -> &[bool] {
        &self.delta
    }
}

/// Builds the full `n x n` kernel matrix for exposures `z` and weights `r`.
///
/// The result is symmetric with unit diagonal and is positive semidefinite
/// (it is a product of Gaussian kernels).
pub fn gaussian_kernel_matrix(z: &Matrix, r: &[f64]) -> Result<Matrix> {
    if r.len() != z.cols() {
        return Err(invalid(format!(
            "{} kernel weights for {} exposure columns",
            r.len(),
            z.cols()
        )));
    }
    if !z.all_finite() {
        return Err(invalid("exposure matrix contains non-finite values"));
    }
    for (m, &rm) in r.iter().enumerate() {
        if !rm.is_finite() || rm < 0.0 {
            return Err(invalid(format!("kernel weight r[{m}] = {rm} must be >= 0")));
        }
    }
    let n = z.rows();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = 1.0;
        let zi = z.row(i);
        for j in 0..i {
            let zj = z.row(j);
            let mut s = 0.0;
            for m in 0..r.len() {
                let d = zi[m] - zj[m];
                s += r[m] * d * d;
            }
            let v = math::exp(-s);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// Kernel block between two exposure sets: `K_ab = exp(-sum_m r_m (a_im - b_jm)^2)`.
pub fn gaussian_cross_kernel(z_a: &Matrix, z_b: &Matrix, r: &[f64]) -> Result<Matrix> {
    if z_a.cols() != z_b.cols() || r.len() != z_a.cols() {
        return Err(invalid("cross kernel requires matching column counts"));
    }
    if !z_a.all_finite() || !z_b.all_finite() {
        return Err(invalid("exposure matrix contains non-finite values"));
    }
    let mut k = Matrix::zeros(z_a.rows(), z_b.rows());
    for i in 0..z_a.rows() {
        let ai = z_a.row(i);
        for j in 0..z_b.rows() {
            let bj = z_b.row(j);
            let mut s = 0.0;
            for m in 0..r.len() {
                let d = ai[m] - bj[m];
                s += r[m] * d * d;
            }
            k[(i, j)] = math::exp(-s);
        }
    }
    Ok(k)
}

/// Precomputed pairwise squared distances per exposure component.
///
/// The sampler proposes new weights hundreds of thousands of times per fit;
/// the squared distances never change, so they are computed once.
#[derive(Debug, Clone)]
pub(crate) struct ComponentDistances {
    per_component: Vec<PackedStrictLower>,
}

impl ComponentDistances {
    pub(crate) fn from_exposures(z: &Matrix) -> Self {
        let n = z.rows();
        let m = z.cols();
        let mut per_component = Vec::with_capacity(m);
        for comp in 0..m {
            let col = z.column(comp);
            let mut d = PackedStrictLower::zeros(n);
            let mut idx = 0;
            for i in 1..n {
                for j in 0..i {
                    let diff = col[i] - col[j];
                    d.data_mut()[idx] = diff * diff;
                    idx += 1;
                }
            }
            per_component.push(d);
        }
        ComponentDistances { per_component }
    }

    /// Writes `K = exp(-sum_m r_m D_m)` into `out` (strict lower triangle;
    /// the diagonal is implicitly 1). Components with `r_m = 0` are skipped;
    /// with no active component the kernel is the all-ones matrix and the
    /// exponentials are skipped entirely.
    pub(crate) fn kernel_into(&self, r: &[f64], out: &mut PackedStrictLower) {
        let buf = out.data_mut();
        if r.iter().all(|&rm| rm == 0.0) {
            buf.fill(1.0);
            return;
        }
        let len = buf.len();
        buf.fill(0.0);
        for (m, &rm) in r.iter().enumerate() {
            if rm == 0.0 {
                continue;
            }
            let d = self.per_component[m].data();
            for idx in 0..len {
                buf[idx] += rm * d[idx];
            }
        }
        for v in buf.iter_mut() {
            *v = math::exp(-*v);
        }
    }
}
