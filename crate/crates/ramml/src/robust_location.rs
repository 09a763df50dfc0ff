//! Robust location and scale primitives: univariate median, MAD scale,
//! and the L1-median (geometric median) with its derived leverage
//! distances.

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Default relative step tolerance for the Weiszfeld iteration.
pub const L1_MEDIAN_TOL: f64 = 1e-10;
/// Default iteration cap for the Weiszfeld iteration.
pub const L1_MEDIAN_MAX_ITER: usize = 500;

/// Outcome of the Weiszfeld iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct L1MedianResult {
    pub center: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Sample median; even lengths average the two central order statistics.
pub fn median(v: &[f64]) -> f64 {
    assert!(!v.is_empty(), "median of empty slice");
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// MAD-style scale `1.483 * median(|r_i|)`.
///
/// Errors with [`Error::DegenerateScale`] when more than half the
/// residuals are exactly zero.
pub fn mad_scale(residuals: &[f64]) -> Result<f64> {
    let abs: Vec<f64> = residuals.iter().map(|r| r.abs()).collect();
    let s = 1.483 * median(&abs);
    if s > 0.0 {
        Ok(s)
    } else {
        Err(Error::DegenerateScale)
    }
}

/// L1-median (geometric median) of the rows of `x` by Weiszfeld iteration.
///
/// When an iterate lands on a data point the update follows Vardi-Zhang:
/// the coinciding point contributes through the subgradient condition
/// instead of a division by zero.
pub fn l1_median(x: &Matrix, tol: f64, max_iter: usize) -> Result<L1MedianResult> {
    let (n, m) = (x.rows(), x.cols());
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one row".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    if n == 1 {
        return Ok(L1MedianResult {
            center: x.row(0).to_vec(),
            iterations: 0,
            converged: true,
        });
    }

    // Coordinate-wise median start.
    let mut center: Vec<f64> = (0..m).map(|j| median(&x.column(j))).collect();

    let data_scale = {
        let mut s = 0.0f64;
        for i in 0..n {
            for (&xij, &cj) in x.row(i).iter().zip(&center) {
                s = s.max((xij - cj).abs());
            }
        }
        s
    };
    // Distance below which a point counts as coinciding with the iterate.
    let coincide = 1e-13 * (1.0 + data_scale);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let mut weight_sum = 0.0;
        let mut target = vec![0.0; m];
        let mut pull = vec![0.0; m];
        let mut multiplicity = 0usize;
        for i in 0..n {
            let row = x.row(i);
            let dist = euclid(row, &center);
            if dist <= coincide {
                multiplicity += 1;
                continue;
            }
            let inv = 1.0 / dist;
            weight_sum += inv;
            for j in 0..m {
                target[j] += row[j] * inv;
                pull[j] += (row[j] - center[j]) * inv;
            }
        }

        if weight_sum == 0.0 {
            // Every row coincides with the iterate.
            converged = true;
            break;
        }
        for t in &mut target {
            *t /= weight_sum;
        }

        let next: Vec<f64> = if multiplicity == 0 {
            target
        } else {
            let r = norm(&pull);
            if r <= multiplicity as f64 {
                // Subgradient optimality at a data point.
                converged = true;
                break;
            }
            let eta = multiplicity as f64 / r;
            (0..m).map(|j| (1.0 - eta) * target[j] + eta * center[j]).collect()
        };

        let step = euclid(&next, &center);
        let center_norm = norm(&center);
        center = next;
        if step <= tol * (1.0 + center_norm) {
            converged = true;
            break;
        }
    }

    Ok(L1MedianResult {
        center,
        iterations,
        converged,
    })
}

/// Distances to the L1-median scaled so their median is one:
/// `x~_i = ||x_i - med|| / median_i ||x_i - med||`.
pub fn scaled_leverage_distance(x: &Matrix) -> Result<Vec<f64>> {
    if x.rows() < 2 {
        return Err(Error::InvalidArgument("need at least two rows".into()));
    }
    let center = l1_median(x, L1_MEDIAN_TOL, L1_MEDIAN_MAX_ITER)?.center;
    let dists: Vec<f64> = (0..x.rows()).map(|i| euclid(x.row(i), &center)).collect();
    let med = median(&dists);
    if !(med > 0.0) {
        return Err(Error::DegenerateScale);
    }
    Ok(dists.iter().map(|d| d / med).collect())
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
