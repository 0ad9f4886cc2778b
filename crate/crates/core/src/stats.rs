//! Sample moments, correlation, and Kolmogorov-Smirnov tests.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::linalg::Matrix;
use crate::math;

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance (n-1 denominator).
pub fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64
}

pub fn sample_sd(x: &[f64]) -> f64 {
    math::sqrt(sample_variance(x))
}

/// Bias-corrected sample skewness `g1 * sqrt(n(n-1)) / (n-2)`.
///
/// Returns `None` for fewer than three points or a constant sample, where
/// the statistic is undefined.
pub fn sample_skewness(x: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 3 {
        return None;
    }
    let m = mean(x);
    let nf = n as f64;
    let m2 = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / nf;
    let m3 = x.iter().map(|v| (v - m) * (v - m) * (v - m)).sum::<f64>() / nf;
    if m2 <= 0.0 {
        return None;
    }
    let g1 = m3 / math::powf(m2, 1.5);
    Some(g1 * math::sqrt(nf * (nf - 1.0)) / (nf - 2.0))
}

/// Pearson correlation of two equal-length samples.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(invalid("pearson requires two equal-length samples of size >= 2"));
    }
    let mx = mean(x);
    let my = mean(y);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(invalid("pearson is undefined for a constant sample"));
    }
    Ok(sxy / math::sqrt(sxx * syy))
}

/// Sample covariance matrix of the columns of `z` (n-1 denominator).
pub fn covariance_matrix(z: &Matrix) -> Result<Matrix> {
    let n = z.rows();
    let m = z.cols();
    if n < 2 {
        return Err(invalid("covariance requires at least two rows"));
    }
    let means: Vec<f64> = (0..m).map(|j| mean(&z.column(j))).collect();
    let mut cov = Matrix::zeros(m, m);
    for i in 0..n {
        let row = z.row(i);
        for a in 0..m {
            let da = row[a] - means[a];
            for b in 0..=a {
                cov[(a, b)] += da * (row[b] - means[b]);
            }
        }
    }
    let denom = (n - 1) as f64;
    for a in 0..m {
        for b in 0..=a {
            let v = cov[(a, b)] / denom;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    Ok(cov)
}

/// Correlation matrix derived from a covariance matrix.
pub fn correlation_from_covariance(cov: &Matrix) -> Result<Matrix> {
    let m = cov.rows();
    if cov.cols() != m {
        return Err(invalid("covariance matrix must be square"));
    }
    let mut corr = Matrix::zeros(m, m);
    for a in 0..m {
        let va = cov[(a, a)];
        if va <= 0.0 {
            return Err(invalid("covariance has a non-positive diagonal entry"));
        }
        for b in 0..m {
            corr[(a, b)] = cov[(a, b)] / math::sqrt(va * cov[(b, b)]);
        }
        corr[(a, a)] = 1.0;
    }
    Ok(corr)
}

/// Survival function of the Kolmogorov distribution,
/// `Q(z) = 2 sum_{j>=1} (-1)^(j-1) exp(-2 j^2 z^2)`.
pub fn kolmogorov_sf(z: f64) -> f64 {
    if z <= 0.0 {
        return 1.0;
    }
    let a2 = -2.0 * z * z;
    let mut fac = 2.0;
    let mut sum = 0.0;
    let mut prev = 0.0;
    for j in 1..=100 {
        let term = fac * math::exp(a2 * (j * j) as f64);
        sum += term;
        if math::abs(term) <= 1e-3 * prev || math::abs(term) <= 1e-12 * math::abs(sum) {
            return sum.clamp(0.0, 1.0);
        }
        fac = -fac;
        prev = math::abs(term);
    }
    1.0
}

/// One-sample Kolmogorov-Smirnov test against a CDF.
///
/// Returns `(statistic, p_value)` using the asymptotic Kolmogorov
/// distribution with the Stephens small-sample correction.
pub fn ks_test<F>(data: &[f64], cdf: F) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let n = data.len();
    if n == 0 {
        return Err(invalid("ks_test requires a non-empty sample"));
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite sample"));
    let nf = n as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let lo = i as f64 / nf;
        let hi = (i + 1) as f64 / nf;
        d = d.max(math::abs(f - lo)).max(math::abs(hi - f));
    }
    let sqrt_n = math::sqrt(nf);
    let p = kolmogorov_sf((sqrt_n + 0.12 + 0.11 / sqrt_n) * d);
    Ok((d, p))
}

/// Two-sample Kolmogorov-Smirnov test.
pub fn ks_test_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid("ks_test_two_sample requires non-empty samples"));
    }
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(|p, q| p.partial_cmp(q).expect("non-finite sample"));
    xb.sort_by(|p, q| p.partial_cmp(q).expect("non-finite sample"));
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max(math::abs(i as f64 / na - j as f64 / nb));
    }
    let ne = math::sqrt(na * nb / (na + nb));
    let p = kolmogorov_sf((ne + 0.12 + 0.11 / ne) * d);
    Ok((d, p))
}

/// Monte Carlo standard error of the mean of a (possibly autocorrelated)
/// chain, estimated by batch means with `floor(sqrt(n))` batches.
pub fn mc_standard_error(chain: &[f64]) -> f64 {
    let n = chain.len();
    if n < 4 {
        return f64::NAN;
    }
    let n_batches = math::sqrt(n as f64) as usize;
    let batch_len = n / n_batches;
    let used = n_batches * batch_len;
    let mut batch_means = vec![0.0; n_batches];
    for (k, bm) in batch_means.iter_mut().enumerate() {
        *bm = mean(&chain[k * batch_len..(k + 1) * batch_len]);
    }
    let _ = used;
    math::sqrt(sample_variance(&batch_means) / n_batches as f64)
}
