//! Adaptive modified maximum likelihood regression and its
//! leverage-robust variant.
//!
//! The estimator linearizes the long-tailed-symmetric score function
//! around standardized residuals `t_i`, which turns the likelihood
//! equations into a closed-form weighted solve. The robust variant
//! additionally downweights predictor outliers through weights built from
//! L1-median distances; removing those weights (setting them to one)
//! recovers the adaptive estimator on the identical code path.

use serde::{Deserialize, Serialize};

use crate::data::RegressionData;
use crate::distributions::Seed;
use crate::error::{Error, Result};
use crate::initial::{fit_lts, fit_s, InitialFit};
use crate::numerics::{dot, solve_weighted_normal, weighted_column_means, Matrix};
use crate::robust_location::scaled_leverage_distance;

/// Scale below which a sigma estimate counts as degenerate.
const SCALE_FLOOR: f64 = 1e-12;
/// Relative residual size below which a fit counts as exact.
const EXACT_FIT_TOL: f64 = 1e-9;

/// Estimator family: adaptive (vertical-outlier robust only) or its
/// leverage-robust extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Amml,
    Ramml,
}

/// Robust regression initializer for the first-iteration residuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Initializer {
    Lts,
    S,
}

/// Final estimator tag; the subscript tracks the initializer
/// (1 = LTS, 2 = S).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Amml1,
    Amml2,
    Ramml1,
    Ramml2,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Amml1 => "amml1",
            Method::Amml2 => "amml2",
            Method::Ramml1 => "ramml1",
            Method::Ramml2 => "ramml2",
        }
    }
}

/// Configuration of one adaptive fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub p: f64,
    pub variant: Variant,
    pub initializer: Initializer,
    pub iterations: usize,
    pub seed: Seed,
}

impl EstimatorConfig {
    /// Default configuration: `p = 16.5`, two iterations.
    pub fn new(variant: Variant, initializer: Initializer, seed: Seed) -> Self {
        Self {
            p: 16.5,
            variant,
            initializer,
            iterations: 2,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        // q = 2p - 3 must stay positive; p <= 1.5 makes the weights
        // meaningless.
        if !self.p.is_finite() || self.p <= 1.5 {
            return Err(Error::InvalidParams {
                p: self.p,
                sigma: 1.0,
            });
        }
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("iterations must be >= 1".into()));
        }
        Ok(())
    }

    pub fn q(&self) -> f64 {
        2.0 * self.p - 3.0
    }

    pub fn method(&self) -> Method {
        match (self.variant, self.initializer) {
            (Variant::Amml, Initializer::Lts) => Method::Amml1,
            (Variant::Amml, Initializer::S) => Method::Amml2,
            (Variant::Ramml, Initializer::Lts) => Method::Ramml1,
            (Variant::Ramml, Initializer::S) => Method::Ramml2,
        }
    }
}

/// Per-observation weights entering the closed-form solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSet {
    pub alpha: Vec<f64>,
    pub delta: Vec<f64>,
    pub delta_x: Vec<f64>,
    /// Expansion points (standardized residuals) the weights came from.
    pub t: Vec<f64>,
    pub p: f64,
    pub q: f64,
}

impl WeightSet {
    /// Combined observation weight `delta_i * delta_x_i`.
    pub fn combined(&self) -> Vec<f64> {
        self.delta
            .iter()
            .zip(&self.delta_x)
            .map(|(d, dx)| d * dx)
            .collect()
    }
}

/// Estimates recorded after each iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationEstimate {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub scale: f64,
}

/// Full output of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub scale: f64,
    pub weights: WeightSet,
    pub residuals: Vec<f64>,
    pub standardized_residuals: Vec<f64>,
    pub method: Method,
    pub iterations: Vec<IterationEstimate>,
}

/// Intermediate quantities of one closed-form solve.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodSolution {
    pub k: Vec<f64>,
    pub l: Vec<f64>,
    pub b_stat: f64,
    pub c_stat: f64,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub scale: f64,
}

/// Taylor weights at the expansion points `t`:
/// `alpha_i = (t_i/q) / (1 + t_i^2/q)^2`, `delta_i = 1 / (1 + t_i^2/q)^2`
/// with `q = 2p - 3`.
pub fn compute_alpha_delta(t: &[f64], p: f64) -> (Vec<f64>, Vec<f64>) {
    let q = 2.0 * p - 3.0;
    let mut alpha = Vec::with_capacity(t.len());
    let mut delta = Vec::with_capacity(t.len());
    for &ti in t {
        let denom = 1.0 + ti * ti / q;
        let d = 1.0 / (denom * denom);
        alpha.push((ti / q) * d);
        delta.push(d);
    }
    (alpha, delta)
}

/// Leverage weights `delta_x_i = 1 / (1 + x~_i^2/q)^4` from the scaled
/// L1-median distances of the predictor rows. Depends on `X` only, so it
/// is computed once per fit.
pub fn compute_delta_x(x: &Matrix, p: f64) -> Result<Vec<f64>> {
    let q = 2.0 * p - 3.0;
    let scaled = scaled_leverage_distance(x)?;
    Ok(scaled
        .iter()
        .map(|&xi| {
            let denom = 1.0 + xi * xi / q;
            1.0 / denom.powi(4)
        })
        .collect())
}

/// Solves the modified likelihood equations for fixed weights.
///
/// Uses data centered at the combined-weight means so the coefficient and
/// intercept equations decouple:
/// `K = (Xc' D Xc)^{-1} Xc' D yc`, `L = (Xc' D Xc)^{-1} Xc' A 1`,
/// `B = (2p/q) (yc - Xc K)' A 1`, `C = (2p/q) (yc - Xc K)' D (yc - Xc K)`,
/// `sigma = (B + sqrt(B^2 + 4nC)) / (2 sqrt(n(n-m-1)))`, `beta = K + L sigma`,
/// and the intercept `beta0 = ybar - xbar' beta + (Delta/w) sigma` with
/// `Delta = sum alpha_i delta_x_i`, `w = sum delta_i delta_x_i`. With unit
/// leverage weights this is the exact solution of the unweighted adaptive
/// equations, so both variants share it.
pub fn solve_modified_likelihood(
    data: &RegressionData,
    alpha: &[f64],
    delta: &[f64],
    delta_x: &[f64],
    p: f64,
) -> Result<LikelihoodSolution> {
    let (n, m) = (data.n(), data.m());
    if alpha.len() != n || delta.len() != n || delta_x.len() != n {
        return Err(Error::DimensionMismatch(
            "weight vectors must have one entry per observation".into(),
        ));
    }
    let q = 2.0 * p - 3.0;

    // Combined weights d_i = delta_i * delta_x_i and a_i = alpha_i * delta_x_i.
    let d: Vec<f64> = delta.iter().zip(delta_x).map(|(de, dx)| de * dx).collect();
    let a: Vec<f64> = alpha.iter().zip(delta_x).map(|(al, dx)| al * dx).collect();
    if d.iter().any(|&di| !(di > 0.0)) {
        return Err(Error::ZeroTotalWeight);
    }

    let x_mean = weighted_column_means(data.x(), &d)?;
    let y_mean = {
        let total: f64 = d.iter().sum();
        d.iter().zip(data.y()).map(|(di, yi)| di * yi).sum::<f64>() / total
    };
    let x_c = data.x().map_indexed(|_, j, v| v - x_mean[j]);
    let y_c: Vec<f64> = data.y().iter().map(|yi| yi - y_mean).collect();

    let k = solve_weighted_normal(&x_c, &d, &y_c)?;
    // Xc' A 1 = Xc' D (alpha ./ delta), so L is a weighted solve too.
    let ratio: Vec<f64> = alpha.iter().zip(delta).map(|(al, de)| al / de).collect();
    let l = solve_weighted_normal(&x_c, &d, &ratio)?;

    let fitted = x_c.mul_vec(&k);
    let resid: Vec<f64> = y_c.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let factor = 2.0 * p / q;
    let b_stat = factor * dot(&a, &resid);
    let c_stat = factor
        * resid
            .iter()
            .zip(&d)
            .map(|(r, di)| di * r * r)
            .sum::<f64>();
    debug_assert!(c_stat >= 0.0, "C must be nonnegative with positive weights");

    let nf = n as f64;
    let dof = (nf * (nf - m as f64 - 1.0)).sqrt();
    let scale = (b_stat + (b_stat * b_stat + 4.0 * nf * c_stat).sqrt()) / (2.0 * dof);

    let coefficients: Vec<f64> = k.iter().zip(&l).map(|(ki, li)| ki + li * scale).collect();
    let w: f64 = d.iter().sum();
    let delta_sum: f64 = a.iter().sum();
    let intercept = y_mean - dot(&x_mean, &coefficients) + delta_sum / w * scale;

    Ok(LikelihoodSolution {
        k,
        l,
        b_stat,
        c_stat,
        intercept,
        coefficients,
        scale,
    })
}

/// Two-iteration adaptive fit (the iteration count is configurable; the
/// default of two reproduces the published procedure).
///
/// Iteration 1 standardizes residuals with the robust initializer,
/// iteration 2 with the first-iteration estimates. Leverage weights are
/// computed once from `X` alone.
pub fn fit(data: &RegressionData, config: &EstimatorConfig) -> Result<FitResult> {
    config.validate()?;
    let init = match config.initializer {
        Initializer::Lts => fit_lts(data, None, config.seed)?,
        Initializer::S => fit_s(data, config.seed)?,
    };
    fit_from_initial(data, config, &init)
}

/// Same as [`fit`] but with a caller-provided initializer fit, so one
/// LTS/S computation can serve several estimators.
pub fn fit_from_initial(
    data: &RegressionData,
    config: &EstimatorConfig,
    init: &InitialFit,
) -> Result<FitResult> {
    config.validate()?;
    let n = data.n();
    let delta_x = match config.variant {
        Variant::Amml => vec![1.0; n],
        Variant::Ramml => compute_delta_x(data.x(), config.p)?,
    };

    let y_scale = 1.0 + data.y().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let init_res = init.residuals(data);
    let mut t = standardized(&init_res, init.scale, y_scale)?;

    let mut trace = Vec::with_capacity(config.iterations);
    let mut last: Option<(LikelihoodSolution, WeightSet)> = None;
    for _ in 0..config.iterations {
        let (alpha, delta) = compute_alpha_delta(&t, config.p);
        let solution = solve_modified_likelihood(data, &alpha, &delta, &delta_x, config.p)?;
        trace.push(IterationEstimate {
            intercept: solution.intercept,
            coefficients: solution.coefficients.clone(),
            scale: solution.scale,
        });
        let weights = WeightSet {
            alpha,
            delta,
            delta_x: delta_x.clone(),
            t: t.clone(),
            p: config.p,
            q: config.q(),
        };
        let res = data.residuals(solution.intercept, &solution.coefficients);
        t = standardized(&res, solution.scale, y_scale)?;
        last = Some((solution, weights));
    }

    let (solution, weights) = last.expect("at least one iteration");
    let residuals = data.residuals(solution.intercept, &solution.coefficients);
    let standardized_residuals = standardized(&residuals, solution.scale, y_scale)?;
    Ok(FitResult {
        intercept: solution.intercept,
        coefficients: solution.coefficients,
        scale: solution.scale,
        weights,
        residuals,
        standardized_residuals,
        method: config.method(),
        iterations: trace,
    })
}

/// Final combined per-observation weights `delta_i * delta_x_i`, the
/// quantity plotted against scaled residuals in the diagnostic output.
pub fn final_weights(fit: &FitResult) -> Vec<f64> {
    fit.weights.combined()
}

/// Residuals over scale, with the convention that an exact fit (all
/// residuals negligible, scale underflowing) standardizes to zero.
/// A vanished scale with real residuals left over is an error.
fn standardized(res: &[f64], scale: f64, y_scale: f64) -> Result<Vec<f64>> {
    if scale > SCALE_FLOOR {
        return Ok(res.iter().map(|r| r / scale).collect());
    }
    if res.iter().all(|r| r.abs() <= EXACT_FIT_TOL * y_scale) {
        return Ok(vec![0.0; res.len()]);
    }
    Err(Error::DegenerateScale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{sample_error, sample_predictors, ErrorLaw};
    use crate::initial::fit_ols;

    #[test]
    fn alpha_delta_at_zero() {
        let (alpha, delta) = compute_alpha_delta(&[0.0], 16.5);
        assert_eq!(alpha[0], 0.0);
        assert_eq!(delta[0], 1.0);
    }

    #[test]
    fn alpha_delta_at_sqrt_q() {
        // t = sqrt(q) makes the denominator (1 + 1)^2 = 4.
        let p = 16.5;
        let q: f64 = 30.0;
        let (alpha, delta) = compute_alpha_delta(&[q.sqrt()], p);
        assert!((delta[0] - 0.25).abs() < 1e-15);
        assert!((alpha[0] - 1.0 / (4.0 * q.sqrt())).abs() < 1e-15);
        assert!((alpha[0] - 0.045644).abs() < 1e-6);
    }

    #[test]
    fn alpha_odd_delta_even() {
        for &t in &[0.3, 1.7, 9.9] {
            let (ap, dp) = compute_alpha_delta(&[t], 5.0);
            let (an, dn) = compute_alpha_delta(&[-t], 5.0);
            assert_eq!(ap[0], -an[0]);
            assert_eq!(dp[0], dn[0]);
        }
    }

    #[test]
    fn weight_identities_hold_exactly() {
        // alpha_i (1 + t_i^2/q)^2 = t_i/q and delta_i (1 + t_i^2/q)^2 = 1.
        let p = 4.25;
        let q = 2.0 * p - 3.0;
        let ts = [-3.0, -0.2, 0.0, 0.7, 2.9, 11.0];
        let (alpha, delta) = compute_alpha_delta(&ts, p);
        for (i, &t) in ts.iter().enumerate() {
            let denom = (1.0 + t * t / q) * (1.0 + t * t / q);
            assert!((alpha[i] * denom - t / q).abs() <= 1e-15 * (1.0 + (t / q).abs()));
            assert!((delta[i] * denom - 1.0).abs() <= 1e-15);
            // alpha carries the sign of t, delta stays in (0, 1].
            if t == 0.0 {
                assert_eq!(alpha[i], 0.0);
            } else {
                assert_eq!(alpha[i].signum(), t.signum());
            }
            assert!(delta[i] > 0.0 && delta[i] <= 1.0);
        }
    }

    #[test]
    fn delta_x_basics() {
        let p = 16.5;
        let q: f64 = 30.0;
        // Five univariate points; the one at the median gets weight 1.
        let x = Matrix::column_vector(&[0.0, 0.0, 0.5, 1.0, 10.0]).unwrap();
        let dx = compute_delta_x(&x, p).unwrap();
        assert!((dx[2] - 1.0).abs() < 1e-9, "point at the L1-median");
        for (i, &w) in dx.iter().enumerate() {
            assert!(w > 0.0 && w <= 1.0 + 1e-12, "weight {i} out of range");
        }
        // Scaled distance sqrt(q) gives (1 + 1)^4 = 16 in the denominator.
        let expected = 1.0 / (1.0 + q / q).powi(4);
        assert!((expected - 0.0625).abs() < 1e-15);

        // Uniform predictor scaling leaves the weights unchanged.
        let xs = x.map_indexed(|_, _, v| 7.0 * v);
        let dxs = compute_delta_x(&xs, p).unwrap();
        for (a, b) in dx.iter().zip(&dxs) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn delta_x_monotone_in_distance() {
        let p = 16.5;
        let q: f64 = 30.0;
        let f = |x: f64| 1.0 / (1.0 + x * x / q).powi(4);
        let mut last = f(0.0);
        for i in 1..200 {
            let cur = f(i as f64 * 0.1);
            assert!(cur < last);
            last = cur;
        }
    }

    #[test]
    fn zero_t_reduces_to_ols() {
        let xs = sample_predictors(25, 2, 0.0, Seed(3)).unwrap();
        let noise = sample_error(ErrorLaw::Normal01, 25, Seed(4)).unwrap();
        let y: Vec<f64> = (0..25)
            .map(|i| 0.5 + xs.get(i, 0) - 2.0 * xs.get(i, 1) + noise[i])
            .collect();
        let data = RegressionData::new(y, xs).unwrap();

        let n = data.n();
        let (alpha, delta) = compute_alpha_delta(&vec![0.0; n], 16.5);
        let ones = vec![1.0; n];
        let sol = solve_modified_likelihood(&data, &alpha, &delta, &ones, 16.5).unwrap();
        let ols = fit_ols(&data).unwrap();
        for (a, b) in sol.coefficients.iter().zip(&ols.coefficients) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        assert!(sol.l.iter().all(|v| v.abs() < 1e-12));
        assert!(sol.b_stat.abs() < 1e-10);
        // With alpha = 0 the intercept correction vanishes.
        assert!((sol.intercept - ols.intercept).abs() < 1e-10);
    }

    #[test]
    fn k_and_l_invariant_under_weight_rescaling() {
        let xs = sample_predictors(15, 1, 0.0, Seed(5)).unwrap();
        let noise = sample_error(ErrorLaw::Laplace, 15, Seed(6)).unwrap();
        let y: Vec<f64> = (0..15).map(|i| 1.0 + 2.0 * xs.get(i, 0) + noise[i]).collect();
        let data = RegressionData::new(y, xs).unwrap();

        let t: Vec<f64> = (0..15).map(|i| (i as f64 - 7.0) / 3.0).collect();
        let (alpha, delta) = compute_alpha_delta(&t, 16.5);
        let dx: Vec<f64> = (0..15).map(|i| 1.0 / (1.0 + i as f64 * 0.1)).collect();
        let base = solve_modified_likelihood(&data, &alpha, &delta, &dx, 16.5).unwrap();

        // Scale alpha and delta jointly by c: D and A scale by c, so the
        // ratio quantities K and L stay fixed.
        let c = 3.7;
        let alpha_s: Vec<f64> = alpha.iter().map(|a| c * a).collect();
        let delta_s: Vec<f64> = delta.iter().map(|d| c * d).collect();
        let scaled = solve_modified_likelihood(&data, &alpha_s, &delta_s, &dx, 16.5).unwrap();
        for (a, b) in base.k.iter().zip(&scaled.k) {
            assert!((a - b).abs() < 1e-10);
        }
        for (a, b) in base.l.iter().zip(&scaled.l) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn solver_matches_direct_formula_oracle() {
        // n = 6, m = 1 with hand-chosen weights; the oracle evaluates the
        // closed forms with scalar arithmetic, independent of the solver.
        let x = [0.5, 1.0, 1.5, 2.5, 3.0, 4.0];
        let y = [1.2, 1.9, 3.4, 5.0, 6.4, 8.1];
        let alpha = [0.01, -0.02, 0.005, 0.0, 0.03, -0.015];
        let delta = [0.9, 0.8, 0.95, 1.0, 0.7, 0.85];
        let dx = [1.0, 0.9, 0.95, 0.6, 0.8, 0.3];
        let p = 16.5;
        let q = 30.0;
        let n = 6.0;

        let d: Vec<f64> = delta.iter().zip(&dx).map(|(a, b)| a * b).collect();
        let a: Vec<f64> = alpha.iter().zip(&dx).map(|(al, b)| al * b).collect();
        let w: f64 = d.iter().sum();
        let big_delta: f64 = a.iter().sum();
        let ybar = d.iter().zip(&y).map(|(di, yi)| di * yi).sum::<f64>() / w;
        let xbar = d.iter().zip(&x).map(|(di, xi)| di * xi).sum::<f64>() / w;
        let xc: Vec<f64> = x.iter().map(|xi| xi - xbar).collect();
        let yc: Vec<f64> = y.iter().map(|yi| yi - ybar).collect();
        let gram: f64 = d.iter().zip(&xc).map(|(di, xi)| di * xi * xi).sum();
        let k = d
            .iter()
            .zip(&xc)
            .zip(&yc)
            .map(|((di, xi), yi)| di * xi * yi)
            .sum::<f64>()
            / gram;
        let l = a.iter().zip(&xc).map(|(ai, xi)| ai * xi).sum::<f64>() / gram;
        let resid: Vec<f64> = yc.iter().zip(&xc).map(|(yi, xi)| yi - k * xi).collect();
        let b_stat = (2.0 * p / q) * a.iter().zip(&resid).map(|(ai, ri)| ai * ri).sum::<f64>();
        let c_stat = (2.0 * p / q)
            * d.iter()
                .zip(&resid)
                .map(|(di, ri)| di * ri * ri)
                .sum::<f64>();
        let sigma = (b_stat + (b_stat * b_stat + 4.0 * n * c_stat).sqrt())
            / (2.0 * (n * (n - 2.0)).sqrt());
        let beta = k + l * sigma;
        let beta0 = ybar - xbar * beta + big_delta / w * sigma;

        let data =
            RegressionData::new(y.to_vec(), Matrix::column_vector(&x).unwrap()).unwrap();
        let sol = solve_modified_likelihood(&data, &alpha, &delta, &dx, p).unwrap();
        assert!((sol.k[0] - k).abs() < 1e-12);
        assert!((sol.l[0] - l).abs() < 1e-12);
        assert!((sol.b_stat - b_stat).abs() < 1e-12);
        assert!((sol.c_stat - c_stat).abs() < 1e-12);
        assert!((sol.scale - sigma).abs() < 1e-12);
        assert!((sol.coefficients[0] - beta).abs() < 1e-12);
        assert!((sol.intercept - beta0).abs() < 1e-12);

        // The returned scale satisfies the defining quadratic.
        let lhs = n * (n - 2.0) * sigma * sigma
            - (n * (n - 2.0)).sqrt() * b_stat * sigma
            - n * c_stat;
        assert!(lhs.abs() <= 1e-8 * (1.0 + n * c_stat));
    }

    #[test]
    fn exact_line_is_a_fixed_point() {
        let x: Vec<f64> = (0..30).map(|i| i as f64 * 0.3 - 4.0).collect();
        let y: Vec<f64> = x.iter().map(|xi| 1.0 + 2.0 * xi).collect();
        let data = RegressionData::new(y, Matrix::column_vector(&x).unwrap()).unwrap();
        for variant in [Variant::Amml, Variant::Ramml] {
            for init in [Initializer::Lts, Initializer::S] {
                let config = EstimatorConfig::new(variant, init, Seed(17));
                let fit = fit(&data, &config).unwrap();
                assert!((fit.intercept - 1.0).abs() < 1e-6, "{:?}", fit.method);
                assert!((fit.coefficients[0] - 2.0).abs() < 1e-6);
                assert!(fit.scale <= 1e-6);
            }
        }
    }

    #[test]
    fn degenerate_scale_with_real_residuals_errors() {
        let res = [0.5, -0.3, 0.2];
        assert_eq!(standardized(&res, 0.0, 1.0).unwrap_err(), Error::DegenerateScale);
    }

    #[test]
    fn amml_equals_ramml_with_unit_leverage_weights() {
        // Forcing the leverage weights to one must reproduce the adaptive
        // variant bit for bit, including the intercept rule.
        let xs = sample_predictors(40, 3, 0.0, Seed(8)).unwrap();
        let noise = sample_error(ErrorLaw::StudentT5, 40, Seed(9)).unwrap();
        let y: Vec<f64> = (0..40)
            .map(|i| 0.3 + xs.get(i, 0) - xs.get(i, 1) + 0.5 * xs.get(i, 2) + noise[i])
            .collect();
        let data = RegressionData::new(y, xs).unwrap();

        let amml = fit(
            &data,
            &EstimatorConfig::new(Variant::Amml, Initializer::Lts, Seed(10)),
        )
        .unwrap();

        // Drive the full pipeline by hand with unit delta_x.
        let init = fit_lts(&data, None, Seed(10)).unwrap();
        let y_scale = 1.0 + data.y().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let ones = vec![1.0; data.n()];
        let mut t = standardized(&init.residuals(&data), init.scale, y_scale).unwrap();
        let mut manual = None;
        for _ in 0..2 {
            let (alpha, delta) = compute_alpha_delta(&t, 16.5);
            let sol = solve_modified_likelihood(&data, &alpha, &delta, &ones, 16.5).unwrap();
            t = standardized(
                &data.residuals(sol.intercept, &sol.coefficients),
                sol.scale,
                y_scale,
            )
            .unwrap();
            manual = Some(sol);
        }
        let manual = manual.unwrap();
        assert_eq!(amml.intercept, manual.intercept);
        assert_eq!(amml.coefficients, manual.coefficients);
        assert_eq!(amml.scale, manual.scale);
    }

    #[test]
    fn final_weights_behave() {
        // Clean centered data: weights stay high. A huge vertical outlier:
        // weight near zero. The scaled distances have median one by
        // construction, so even clean extreme-x points sit below
        // (1 + 1/q)^{-4} ~ 0.88; "near one" means a high floor and median,
        // not unity.
        let x: Vec<f64> = (0..20).map(|i| (i as f64 - 9.5) * 0.1).collect();
        let noise = sample_error(ErrorLaw::Normal01, 20, Seed(20)).unwrap();
        let y: Vec<f64> = x.iter().zip(&noise).map(|(xi, e)| xi + 0.05 * e).collect();
        let data = RegressionData::new(y.clone(), Matrix::column_vector(&x).unwrap()).unwrap();
        let config = EstimatorConfig::new(Variant::Ramml, Initializer::S, Seed(21));
        let clean_fit = fit(&data, &config).unwrap();
        let w = final_weights(&clean_fit);
        assert!(w.iter().all(|&wi| wi >= 0.45), "{w:?}");
        assert!(crate::robust_location::median(&w) >= 0.8, "{w:?}");

        let mut y_out = y;
        y_out[7] = 1e4;
        let data = RegressionData::new(y_out, Matrix::column_vector(&x).unwrap()).unwrap();
        let out_fit = fit(&data, &config).unwrap();
        let w = final_weights(&out_fit);
        assert!(w[7] < 1e-6, "outlier weight {}", w[7]);
    }

    #[test]
    fn fixed_weight_self_consistency() {
        // With weights frozen at their final values the returned estimates
        // satisfy the estimating equations.
        let xs = sample_predictors(30, 2, 0.0, Seed(30)).unwrap();
        let noise = sample_error(ErrorLaw::Laplace, 30, Seed(31)).unwrap();
        let y: Vec<f64> = (0..30)
            .map(|i| 1.0 - xs.get(i, 0) + 2.0 * xs.get(i, 1) + noise[i])
            .collect();
        let data = RegressionData::new(y, xs).unwrap();
        let config = EstimatorConfig::new(Variant::Ramml, Initializer::S, Seed(32));
        let result = fit(&data, &config).unwrap();

        let n = data.n();
        let ws = &result.weights;
        let z: Vec<f64> = result.residuals.iter().map(|r| r / result.scale).collect();
        let mut eq0 = 0.0;
        let mut eqj = vec![0.0; data.m()];
        for i in 0..n {
            let s = ws.delta_x[i] * (ws.alpha[i] + ws.delta[i] * z[i]);
            eq0 += s;
            for j in 0..data.m() {
                eqj[j] += s * data.x().get(i, j);
            }
        }
        assert!(eq0.abs() <= 1e-8 * n as f64, "intercept equation {eq0}");
        for (j, v) in eqj.iter().enumerate() {
            assert!(v.abs() <= 1e-8 * n as f64, "coefficient equation {j}: {v}");
        }
    }

    #[test]
    fn trace_has_one_entry_per_iteration() {
        let x: Vec<f64> = (0..15).map(|i| i as f64 * 0.4).collect();
        let noise = sample_error(ErrorLaw::Normal01, 15, Seed(40)).unwrap();
        let y: Vec<f64> = x.iter().zip(&noise).map(|(xi, e)| xi + 0.2 * e).collect();
        let data = RegressionData::new(y, Matrix::column_vector(&x).unwrap()).unwrap();
        let mut config = EstimatorConfig::new(Variant::Amml, Initializer::Lts, Seed(41));
        config.iterations = 4;
        let fit = fit(&data, &config).unwrap();
        assert_eq!(fit.iterations.len(), 4);
        let last = fit.iterations.last().unwrap();
        assert_eq!(last.intercept, fit.intercept);
        assert_eq!(last.scale, fit.scale);
    }
}
