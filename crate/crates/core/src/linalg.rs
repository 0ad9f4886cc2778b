//! Dense row-major matrices and the symmetric factorization used by the
//! marginalized likelihood.
//!
//! The sampler refactors `I + lambda K` once per proposal, so
//! [`cholesky_in_place`] and the triangular solves are written to run on
//! preallocated buffers with contiguous row access.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{invalid, numerical, Result};
use crate::math;

/// Dense `rows x cols` matrix of `f64`, row-major.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds from row-major data; `data.len()` must equal `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(invalid(format!(
                "matrix data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(nrows * ncols);
        for row in rows {
            if row.len() != ncols {
                return Err(invalid("ragged rows"));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            rows: nrows,
            cols: ncols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().copied()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self * v` for a vector `v` of length `cols`.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `self' * v` for a vector `v` of length `rows`.
    pub fn transpose_matvec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        out
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        math::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    pub fn max_abs_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max(math::abs(self[(i, j)] - self[(j, i)]));
            }
        }
        worst
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Dot product with four independent accumulators. The factorization loop
/// spends almost all of its time here; the fixed accumulation pattern keeps
/// results deterministic while letting the compiler vectorize.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let chunks = a.len() / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for k in 0..chunks {
        let i = 4 * k;
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    let mut acc = (s0 + s1) + (s2 + s3);
    for i in 4 * chunks..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

/// In-place Cholesky of a symmetric positive definite matrix.
///
/// Only the lower triangle of `a` is read; on success the lower triangle
/// holds `L` with `L L' = A` (the strict upper triangle is left untouched).
/// Fails with a diagnostic naming the offending pivot when the matrix is not
/// numerically positive definite.
pub fn cholesky_in_place(a: &mut Matrix) -> Result<()> {
    let n = a.rows;
    if a.cols != n {
        return Err(invalid("cholesky requires a square matrix"));
    }
    for i in 0..n {
        // Split so row i and earlier rows can be borrowed simultaneously.
        let (head, tail) = a.data.split_at_mut(i * n);
        let row_i = &mut tail[..n];
        for j in 0..i {
            let row_j = &head[j * n..j * n + j];
            let s = row_i[j] - dot(&row_i[..j], row_j);
            let pivot = head[j * n + j];
            row_i[j] = s / pivot;
        }
        let s = row_i[i] - dot(&row_i[..i], &row_i[..i]);
        if !(s > 0.0) || !s.is_finite() {
            return Err(numerical(format!(
                "cholesky pivot {i} of {n} is non-positive ({s:.3e}); matrix is not positive definite"
            )));
        }
        row_i[i] = math::sqrt(s);
    }
    Ok(())
}

/// Solves `L w = b` in place (forward substitution, lower triangle of `l`).
pub fn solve_lower_in_place(l: &Matrix, x: &mut [f64]) {
    let n = l.rows;
    debug_assert_eq!(x.len(), n);
    for i in 0..n {
        let row = l.row(i);
        let s = x[i] - dot(&row[..i], &x[..i]);
        x[i] = s / row[i];
    }
}

/// Solves `L' v = b` in place (back substitution with the transpose).
pub fn solve_lower_transpose_in_place(l: &Matrix, x: &mut [f64]) {
    let n = l.rows;
    debug_assert_eq!(x.len(), n);
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
}

/// Solves `L L' x = b` in place given the factor `L`.
pub fn solve_cholesky_in_place(l: &Matrix, x: &mut [f64]) {
    solve_lower_in_place(l, x);
    solve_lower_transpose_in_place(l, x);
}

/// `log det(A) = 2 sum ln L_ii` for a factored matrix.
pub fn log_det_from_factor(l: &Matrix) -> f64 {
    (0..l.rows).map(|i| math::ln(l[(i, i)])).sum::<f64>() * 2.0
}

/// Owned Cholesky factorization of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    pub fn decompose(a: &Matrix) -> Result<Self> {
        let mut l = a.clone();
        cholesky_in_place(&mut l)?;
        Ok(Cholesky { l })
    }

    /// Wraps an already-computed factor (lower triangle of `l`).
    pub fn from_factor(l: Matrix) -> Self {
        Cholesky { l }
    }

    /// Factors `A`, retrying once with `jitter` added to the diagonal when
    /// the first attempt fails. The error from the retry reports both the
    /// pivot diagnostic and the diagonal range of the input.
    pub fn decompose_with_jitter(a: &Matrix, jitter: f64) -> Result<Self> {
        match Self::decompose(a) {
            Ok(c) => Ok(c),
            Err(_) => {
                let mut l = a.clone();
                for i in 0..l.rows {
                    l[(i, i)] += jitter;
                }
                cholesky_in_place(&mut l).map_err(|e| {
                    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                    for i in 0..a.rows {
                        lo = lo.min(a[(i, i)]);
                        hi = hi.max(a[(i, i)]);
                    }
                    numerical(format!(
                        "{e} (after jitter {jitter:.1e}; diagonal range [{lo:.3e}, {hi:.3e}])"
                    ))
                })?;
                Ok(Cholesky { l })
            }
        }
    }

    pub fn factor(&self) -> &Matrix {
        &self.l
    }

    pub fn log_det(&self) -> f64 {
        log_det_from_factor(&self.l)
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        solve_cholesky_in_place(&self.l, &mut x);
        x
    }

    pub fn forward_solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        solve_lower_in_place(&self.l, &mut x);
        x
    }
}

/// Symmetric matrix stored as its strict lower triangle (diagonal excluded).
///
/// Used for pairwise squared distances (zero diagonal) and kernel matrices
/// (unit diagonal), where the diagonal is known by construction.
#[derive(Debug, Clone)]
pub(crate) struct PackedStrictLower {
    n: usize,
    data: Vec<f64>,
}

impl PackedStrictLower {
    pub(crate) fn zeros(n: usize) -> Self {
        PackedStrictLower {
            n,
            data: vec![0.0; n * (n - 1) / 2],
        }
    }

    #[inline]
    pub(crate) fn n(&self) -> usize {
        self.n
    }

    pub(crate) fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Entry `(i, j)` with `i > j`.
    #[cfg(test)]
    pub(crate) fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i > j);
        self.data[i * (i - 1) / 2 + j]
    }
}

/// Least-squares solution of `X b = y` through the normal equations.
///
/// Returns the empty vector when `X` has zero columns. Errors when `X'X` is
/// singular.
pub fn least_squares(x: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
    let p = x.cols();
    if p == 0 {
        return Ok(Vec::new());
    }
    if x.rows() != y.len() {
        return Err(invalid("least_squares: row count mismatch"));
    }
    let mut xtx = Matrix::zeros(p, p);
    for i in 0..x.rows() {
        let row = x.row(i);
        for a in 0..p {
            for b in 0..=a {
                xtx[(a, b)] += row[a] * row[b];
            }
        }
    }
    let xty = x.transpose_matvec(y);
    let chol = Cholesky::decompose(&xtx)
        .map_err(|e| numerical(format!("normal equations are singular: {e}")))?;
    Ok(chol.solve(&xty))
}
