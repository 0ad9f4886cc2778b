//! Marginalized Gaussian likelihood for the kernel machine model.
//!
//! With the exposure-response surface `h ~ GP(0, tau K)` integrated out and
//! `lambda = tau / sigma2`, the observed data follow
//! `y ~ N(X beta, sigma2 (I + lambda K))`. Everything the sampler needs is a
//! symmetric factorization of `I + lambda K`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::kernel::gaussian_cross_kernel;
use crate::linalg::{log_det_from_factor, solve_cholesky_in_place, Cholesky, Matrix};
use crate::math;

/// Diagonal jitter added on a failed factorization before the single retry.
pub const FACTOR_JITTER: f64 = 1e-8;

const LN_2PI: f64 = 1.8378770664093453;

/// Confounder coefficients, residual variance, and the kernel-variance ratio.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelParams {
    pub beta: Vec<f64>,
    pub sigma2: f64,
    pub lambda: f64,
}

impl ModelParams {
    pub fn new(beta: Vec<f64>, sigma2: f64, lambda: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(invalid(format!("sigma2 must be positive, got {sigma2}")));
        }
        if lambda < 0.0 || !lambda.is_finite() {
            return Err(invalid(format!("lambda must be nonnegative, got {lambda}")));
        }
        if !beta.iter().all(|b| b.is_finite()) {
            return Err(invalid("beta contains non-finite values"));
        }
        Ok(ModelParams { beta, sigma2, lambda })
    }
}

/// Builds `V = I + lambda K` and factors it, retrying once with jitter.
pub(crate) fn factor_marginal_covariance(k: &Matrix, lambda: f64) -> Result<Cholesky> {
    let n = k.rows();
    let mut v = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let kij = k[(i, j)];
            v[(i, j)] = if i == j { 1.0 + lambda * kij } else { lambda * kij };
        }
    }
    Cholesky::decompose_with_jitter(&v, FACTOR_JITTER)
}

/// Log density of `y` under `N(X beta, sigma2 (I + lambda K))`.
///
/// `k` must be the symmetric positive semidefinite kernel matrix of the
/// exposures; dimensions of `y`, `x`, and `k` must agree.
pub fn marginal_log_likelihood(
    y: &[f64],
    x: &Matrix,
    params: &ModelParams,
    k: &Matrix,
) -> Result<f64> {
    let n = y.len();
    if k.rows() != n || k.cols() != n {
        return Err(invalid(format!(
            "kernel matrix is {}x{} but y has length {n}",
            k.rows(),
            k.cols()
        )));
    }
    if x.cols() > 0 && x.rows() != n {
        return Err(invalid("confounder rows do not match response length"));
    }
    if x.cols() != params.beta.len() {
        return Err(invalid(format!(
            "{} confounder columns but beta has length {}",
            x.cols(),
            params.beta.len()
        )));
    }
    let chol = factor_marginal_covariance(k, params.lambda)?;
    let resid = residuals(y, x, &params.beta);
    let w = chol.forward_solve(&resid);
    let q: f64 = w.iter().map(|v| v * v).sum();
    Ok(-0.5
        * (n as f64 * (LN_2PI + math::ln(params.sigma2))
            + log_det_from_factor(chol.factor())
            + q / params.sigma2))
}

pub(crate) fn residuals(y: &[f64], x: &Matrix, beta: &[f64]) -> Vec<f64> {
    if beta.is_empty() {
        return y.to_vec();
    }
    let fitted = x.matvec(beta);
    y.iter().zip(&fitted).map(|(yi, fi)| yi - fi).collect()
}

/// Posterior mean of the exposure-response surface at new exposure rows:
/// `E[h(Z_new)] = lambda K_new,train (I + lambda K)^-1 (y - X beta)`.
///
/// `r` are the kernel weights the model was conditioned on. At `lambda = 0`
/// the surface has no kernel contribution and the result is identically zero.
pub fn posterior_h_mean(
    z_train: &Matrix,
    y: &[f64],
    x: &Matrix,
    params: &ModelParams,
    r: &[f64],
    z_new: &Matrix,
) -> Result<Vec<f64>> {
    if z_new.cols() != z_train.cols() {
        return Err(invalid(format!(
            "new exposures have {} columns, training data has {}",
            z_new.cols(),
            z_train.cols()
        )));
    }
    if z_train.rows() != y.len() {
        return Err(invalid("training exposures and response differ in length"));
    }
    if params.lambda == 0.0 {
        return Ok(vec![0.0; z_new.rows()]);
    }
    let k = crate::kernel::gaussian_kernel_matrix(z_train, r)?;
    let chol = factor_marginal_covariance(&k, params.lambda)?;
    let mut u = residuals(y, x, &params.beta);
    solve_cholesky_in_place(chol.factor(), &mut u);
    let k_cross = gaussian_cross_kernel(z_new, z_train, r)?;
    Ok(k_cross.matvec(&u).iter().map(|v| params.lambda * v).collect())
}
