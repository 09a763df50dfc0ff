//! Minimal dense linear-algebra kernel.
//!
//! Everything else in the crate reduces its linear algebra to one delicate
//! primitive: assembling and solving the weighted normal equations
//! `X' diag(w) X b = X' diag(w) rhs`. The solve goes through a pivoted
//! Cholesky factorization of the weighted Gram matrix followed by one step
//! of iterative refinement, and rejects systems whose condition estimate
//! exceeds [`CONDITION_LIMIT`].

use crate::error::{Error, Result};

/// Condition-estimate cutoff beyond which a weighted Gram matrix is
/// treated as singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Dense row-major matrix of finite `f64` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data. Fails if the element count is
    /// inconsistent or any entry is non-finite.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entry".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(r, c, rows.concat())
    }

    /// Single-column matrix from a slice.
    pub fn column_vector(v: &[f64]) -> Result<Self> {
        Self::new(v.len(), 1, v.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    /// Borrow row `i` as a slice.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Matrix-vector product `X v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "mul_vec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// New matrix with `f(i, j, x)` applied to each entry.
    pub fn map_indexed<F: Fn(usize, usize, f64) -> f64>(&self, f: F) -> Self {
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, f(i, j, self.get(i, j)));
            }
        }
        out
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Solves the weighted least-squares problem
/// `min_b sum_i w_i (rhs_i - x_i' b)^2` through the normal equations.
///
/// Weights must be nonnegative with at least `m` strictly positive entries;
/// the weighted Gram matrix must be nonsingular to working tolerance.
pub fn solve_weighted_normal(x: &Matrix, w: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let (n, m) = (x.rows(), x.cols());
    if w.len() != n || rhs.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "X is {n}x{m}, w has {} entries, rhs has {}",
            w.len(),
            rhs.len()
        )));
    }
    if m == 0 || n < m {
        return Err(Error::DimensionMismatch(format!(
            "need n >= m >= 1, got n = {n}, m = {m}"
        )));
    }
    if w.iter().any(|&wi| !wi.is_finite() || wi < 0.0) {
        return Err(Error::InvalidArgument("weights must be finite and >= 0".into()));
    }
    if w.iter().filter(|&&wi| wi > 0.0).count() < m {
        return Err(Error::SingularSystem { cond: f64::INFINITY });
    }

    let gram = weighted_gram(x, w);
    let v = weighted_xt_vec(x, w, rhs);
    let chol = PivotedCholesky::factor(&gram)?;
    let mut b = chol.solve(&v);

    // One step of iterative refinement keeps the normal-equation residual
    // near machine level even for ill-conditioned accepted systems.
    let mut resid = v.clone();
    let gb = sym_mul_vec(&gram, &b);
    for i in 0..m {
        resid[i] -= gb[i];
    }
    let corr = chol.solve(&resid);
    for i in 0..m {
        b[i] += corr[i];
    }
    Ok(b)
}

/// Per-column weighted means `(sum_i w_i x_ij) / (sum_i w_i)`.
pub fn weighted_column_means(x: &Matrix, w: &[f64]) -> Result<Vec<f64>> {
    if w.len() != x.rows() {
        return Err(Error::DimensionMismatch(format!(
            "X has {} rows, w has {} entries",
            x.rows(),
            w.len()
        )));
    }
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroTotalWeight);
    }
    let mut means = vec![0.0; x.cols()];
    for i in 0..x.rows() {
        let row = x.row(i);
        for (mj, &xij) in means.iter_mut().zip(row) {
            *mj += w[i] * xij;
        }
    }
    for mj in &mut means {
        *mj /= total;
    }
    Ok(means)
}

/// `X' diag(w) X`, stored dense symmetric.
fn weighted_gram(x: &Matrix, w: &[f64]) -> Matrix {
    let m = x.cols();
    let mut g = Matrix::zeros(m, m);
    for i in 0..x.rows() {
        let wi = w[i];
        if wi == 0.0 {
            continue;
        }
        let row = x.row(i);
        for j in 0..m {
            let wj = wi * row[j];
            for k in j..m {
                let v = g.get(j, k) + wj * row[k];
                g.set(j, k, v);
            }
        }
    }
    for j in 0..m {
        for k in 0..j {
            g.set(j, k, g.get(k, j));
        }
    }
    g
}

/// `X' diag(w) v` for an n-vector `v`.
fn weighted_xt_vec(x: &Matrix, w: &[f64], v: &[f64]) -> Vec<f64> {
    let m = x.cols();
    let mut out = vec![0.0; m];
    for i in 0..x.rows() {
        let wv = w[i] * v[i];
        if wv == 0.0 {
            continue;
        }
        let row = x.row(i);
        for j in 0..m {
            out[j] += wv * row[j];
        }
    }
    out
}

fn sym_mul_vec(g: &Matrix, v: &[f64]) -> Vec<f64> {
    g.mul_vec(v)
}

/// Cholesky factorization with diagonal pivoting of a symmetric
/// positive-definite matrix, `P A P' = L L'`.
struct PivotedCholesky {
    l: Matrix,
    perm: Vec<usize>,
}

impl PivotedCholesky {
    fn factor(a: &Matrix) -> Result<Self> {
        let m = a.rows();
        let mut work = a.clone();
        let mut perm: Vec<usize> = (0..m).collect();
        let mut l = Matrix::zeros(m, m);

        for k in 0..m {
            // Pick the largest remaining diagonal entry as the pivot.
            let mut pivot = k;
            for j in k + 1..m {
                if work.get(j, j) > work.get(pivot, pivot) {
                    pivot = j;
                }
            }
            if pivot != k {
                swap_sym(&mut work, k, pivot);
                swap_rows_first_cols(&mut l, k, pivot, k);
                perm.swap(k, pivot);
            }

            let mut d = work.get(k, k);
            for j in 0..k {
                d -= l.get(k, j) * l.get(k, j);
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::SingularSystem { cond: f64::INFINITY });
            }
            let lkk = d.sqrt();
            l.set(k, k, lkk);
            for i in k + 1..m {
                let mut s = work.get(i, k);
                for j in 0..k {
                    s -= l.get(i, j) * l.get(k, j);
                }
                l.set(i, k, s / lkk);
            }
        }

        // With diagonal pivoting the pivots decrease, so their extreme
        // ratio squared estimates the spectral condition number.
        let first = l.get(0, 0);
        let last = l.get(m - 1, m - 1);
        let cond = (first / last).powi(2);
        if !cond.is_finite() || cond > CONDITION_LIMIT {
            return Err(Error::SingularSystem { cond });
        }
        Ok(Self { l, perm })
    }

    /// Solves `A z = v` given the pivoted factorization.
    fn solve(&self, v: &[f64]) -> Vec<f64> {
        let m = self.perm.len();
        let mut y = vec![0.0; m];
        // Forward substitution on the permuted right-hand side.
        for i in 0..m {
            let mut s = v[self.perm[i]];
            for j in 0..i {
                s -= self.l.get(i, j) * y[j];
            }
            y[i] = s / self.l.get(i, i);
        }
        // Back substitution with L'.
        let mut z = vec![0.0; m];
        for i in (0..m).rev() {
            let mut s = y[i];
            for j in i + 1..m {
                s -= self.l.get(j, i) * z[j];
            }
            z[i] = s / self.l.get(i, i);
        }
        // Undo the permutation.
        let mut out = vec![0.0; m];
        for i in 0..m {
            out[self.perm[i]] = z[i];
        }
        out
    }
}

fn swap_sym(a: &mut Matrix, p: usize, q: usize) {
    let m = a.rows();
    for j in 0..m {
        let (apj, aqj) = (a.get(p, j), a.get(q, j));
        a.set(p, j, aqj);
        a.set(q, j, apj);
    }
    for i in 0..m {
        let (aip, aiq) = (a.get(i, p), a.get(i, q));
        a.set(i, p, aiq);
        a.set(i, q, aip);
    }
}

fn swap_rows_first_cols(l: &mut Matrix, p: usize, q: usize, ncols: usize) {
    for j in 0..ncols {
        let (lpj, lqj) = (l.get(p, j), l.get(q, j));
        l.set(p, j, lqj);
        l.set(q, j, lpj);
    }
}

/// Lower Cholesky factor of a small symmetric positive-definite matrix,
/// without pivoting. Used for covariance factorizations.
pub(crate) fn cholesky_lower(a: &Matrix) -> Option<Matrix> {
    let m = a.rows();
    let mut l = Matrix::zeros(m, m);
    for k in 0..m {
        let mut d = a.get(k, k);
        for j in 0..k {
            d -= l.get(k, j) * l.get(k, j);
        }
        if !(d > 0.0) {
            return None;
        }
        let lkk = d.sqrt();
        l.set(k, k, lkk);
        for i in k + 1..m {
            let mut s = a.get(i, k);
            for j in 0..k {
                s -= l.get(i, j) * l.get(k, j);
            }
            l.set(i, k, s / lkk);
        }
    }
    Some(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{x} vs {y} (tol {tol})");
        }
    }

    #[test]
    fn unit_weight_column_of_ones_gives_mean() {
        let x = Matrix::new(3, 1, vec![1.0, 1.0, 1.0]).unwrap();
        let b = solve_weighted_normal(&x, &[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_close(&b, &[2.0], 1e-12);
    }

    #[test]
    fn zero_weight_removes_row_exactly() {
        let x = Matrix::new(2, 1, vec![1.0, 2.0]).unwrap();
        let b = solve_weighted_normal(&x, &[1.0, 0.0], &[3.0, 100.0]).unwrap();
        assert_close(&b, &[3.0], 1e-12);
    }

    #[test]
    fn matches_explicit_two_by_two_inverse() {
        // Independent oracle: closed-form inverse of the 2x2 weighted Gram.
        let x = Matrix::from_rows(&[
            vec![1.0, 0.3],
            vec![1.0, -1.2],
            vec![1.0, 2.4],
            vec![1.0, 0.9],
            vec![1.0, -0.5],
        ])
        .unwrap();
        let w = [0.7, 1.3, 0.4, 2.0, 1.1];
        let rhs = [2.1, -0.4, 3.3, 1.8, 0.2];

        let (mut g00, mut g01, mut g11, mut v0, mut v1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..5 {
            let (a, b) = (x.get(i, 0), x.get(i, 1));
            g00 += w[i] * a * a;
            g01 += w[i] * a * b;
            g11 += w[i] * b * b;
            v0 += w[i] * a * rhs[i];
            v1 += w[i] * b * rhs[i];
        }
        let det = g00 * g11 - g01 * g01;
        let expected = [(g11 * v0 - g01 * v1) / det, (g00 * v1 - g01 * v0) / det];

        let b = solve_weighted_normal(&x, &w, &rhs).unwrap();
        assert_close(&b, &expected, 1e-10);
    }

    #[test]
    fn weight_rescaling_leaves_solution_unchanged() {
        let x = Matrix::from_rows(&[
            vec![1.0, 0.3],
            vec![1.0, -1.2],
            vec![1.0, 2.4],
            vec![1.0, 0.9],
        ])
        .unwrap();
        let w = [0.7, 1.3, 0.4, 2.0];
        let ws: Vec<f64> = w.iter().map(|wi| wi * 37.5).collect();
        let rhs = [2.1, -0.4, 3.3, 1.8];
        let b1 = solve_weighted_normal(&x, &w, &rhs).unwrap();
        let b2 = solve_weighted_normal(&x, &ws, &rhs).unwrap();
        for (a, b) in b1.iter().zip(&b2) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn equation_residual_is_tiny() {
        let x = Matrix::from_rows(&[
            vec![1.0, 0.31, -0.2],
            vec![1.0, -1.27, 0.8],
            vec![1.0, 2.44, 1.5],
            vec![1.0, 0.93, -2.2],
            vec![1.0, -0.51, 0.4],
            vec![1.0, 1.11, 0.9],
        ])
        .unwrap();
        let w = [0.7, 1.3, 0.4, 2.0, 1.1, 0.05];
        let rhs = [2.1, -0.4, 3.3, 1.8, 0.2, -5.0];
        let b = solve_weighted_normal(&x, &w, &rhs).unwrap();

        let fitted = x.mul_vec(&b);
        let resid_w: Vec<f64> = (0..6).map(|i| w[i] * (rhs[i] - fitted[i])).collect();
        let mut eqres = vec![0.0; 3];
        let mut scale = vec![0.0; 3];
        for i in 0..6 {
            for j in 0..3 {
                eqres[j] += x.get(i, j) * resid_w[i];
                scale[j] += x.get(i, j) * w[i] * rhs[i];
            }
        }
        let rel = norm2(&eqres) / (1.0 + norm2(&scale));
        assert!(rel <= 1e-10, "relative equation residual {rel}");
    }

    #[test]
    fn singular_gram_is_rejected() {
        // Second column is a multiple of the first.
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]).unwrap();
        let err = solve_weighted_normal(&x, &[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap_err();
        assert!(matches!(err, Error::SingularSystem { .. }));
    }

    #[test]
    fn too_few_positive_weights_is_singular() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.5], vec![3.0, 6.0]]).unwrap();
        let err = solve_weighted_normal(&x, &[1.0, 0.0, 0.0], &[1.0, 2.0, 3.0]).unwrap_err();
        assert!(matches!(err, Error::SingularSystem { .. }));
    }

    #[test]
    fn column_means_unit_weights() {
        let x = Matrix::from_rows(&[vec![1.0, 10.0], vec![2.0, 20.0], vec![3.0, 30.0]]).unwrap();
        let m = weighted_column_means(&x, &[1.0, 1.0, 1.0]).unwrap();
        assert_close(&m, &[2.0, 20.0], 1e-14);
    }

    #[test]
    fn column_means_indicator_picks_row() {
        let x = Matrix::from_rows(&[vec![1.0, 10.0], vec![2.0, 20.0], vec![3.0, 30.0]]).unwrap();
        let m = weighted_column_means(&x, &[0.0, 1.0, 0.0]).unwrap();
        assert_close(&m, &[2.0, 20.0], 1e-14);
    }

    #[test]
    fn column_means_hand_weighted() {
        // Weights (1, 2, 3): means are (1*1+2*2+3*3)/6 and (1*10+2*20+3*30)/6.
        let x = Matrix::from_rows(&[vec![1.0, 10.0], vec![2.0, 20.0], vec![3.0, 30.0]]).unwrap();
        let m = weighted_column_means(&x, &[1.0, 2.0, 3.0]).unwrap();
        assert_close(&m, &[14.0 / 6.0, 140.0 / 6.0], 1e-14);
    }

    #[test]
    fn column_means_zero_weight_errors() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert_eq!(
            weighted_column_means(&x, &[0.0, 0.0]).unwrap_err(),
            Error::ZeroTotalWeight
        );
    }

    #[test]
    fn matrix_rejects_non_finite() {
        assert!(Matrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Matrix::new(2, 2, vec![1.0, 2.0, 3.0]).is_err());
    }
}
