//! Error-law densities and samplers.
//!
//! Covers the long-tailed symmetric density used by the estimators, the
//! five simulation error distributions, and equicorrelated multivariate
//! normal predictor generation. All samplers are driven by an explicit
//! [`Seed`] and are bit-reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Open01, OpenClosed01, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta;

use crate::error::{Error, Result};
use crate::numerics::{cholesky_lower, Matrix};

/// Shape/scale parameterization of the long-tailed symmetric law.
///
/// The derived exponent parameter is `q = 2p - 3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LtsParams {
    p: f64,
    sigma: f64,
}

impl LtsParams {
    /// Requires `p >= 2` and `sigma > 0`.
    pub fn new(p: f64, sigma: f64) -> Result<Self> {
        if !(p >= 2.0) || !(sigma > 0.0) || !p.is_finite() || !sigma.is_finite() {
            return Err(Error::InvalidParams { p, sigma });
        }
        Ok(Self { p, sigma })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn q(&self) -> f64 {
        2.0 * self.p - 3.0
    }
}

/// The five simulation error distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorLaw {
    Normal01,
    Laplace,
    StudentT5,
    Cauchy,
    Slash,
}

impl ErrorLaw {
    pub const ALL: [ErrorLaw; 5] = [
        ErrorLaw::Normal01,
        ErrorLaw::Laplace,
        ErrorLaw::StudentT5,
        ErrorLaw::Cauchy,
        ErrorLaw::Slash,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ErrorLaw::Normal01 => "normal",
            ErrorLaw::Laplace => "laplace",
            ErrorLaw::StudentT5 => "t5",
            ErrorLaw::Cauchy => "t1",
            ErrorLaw::Slash => "slash",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normal" | "n01" | "gaussian" => Ok(ErrorLaw::Normal01),
            "laplace" => Ok(ErrorLaw::Laplace),
            "t5" | "student-t5" => Ok(ErrorLaw::StudentT5),
            "t1" | "cauchy" => Ok(ErrorLaw::Cauchy),
            "slash" => Ok(ErrorLaw::Slash),
            other => Err(Error::InvalidArgument(format!("unknown error law `{other}`"))),
        }
    }
}

/// Seed for a deterministic sample stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed(pub u64);

impl Seed {
    /// Fresh generator positioned at the start of this seed's stream.
    pub fn rng(self) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(self.0)
    }

    /// Derives an independent substream keyed by `parts`, e.g.
    /// `(cell, replication, estimator)` indices. The derivation is a
    /// splitmix64 chain, so distinct key paths get distinct streams.
    pub fn derive(self, parts: &[u64]) -> Seed {
        let mut state = splitmix64(self.0 ^ 0xA076_1D64_78BD_642F);
        for &p in parts {
            state = splitmix64(state ^ splitmix64(p.wrapping_add(0x9E37_79B9_7F4A_7C15)));
        }
        Seed(state)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Density of the long-tailed symmetric law at `e`.
pub fn lts_pdf(e: f64, params: LtsParams) -> f64 {
    let q = params.q();
    let sigma = params.sigma;
    let norm = 1.0 / (q.sqrt() * beta(0.5, params.p - 0.5) * sigma);
    norm * (1.0 + e * e / (q * sigma * sigma)).powf(-params.p)
}

/// Draws `n` i.i.d. errors from `law`.
pub fn sample_error(law: ErrorLaw, n: usize, seed: Seed) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be >= 1".into()));
    }
    let mut rng = seed.rng();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(draw_error(law, &mut rng));
    }
    Ok(out)
}

pub(crate) fn draw_error(law: ErrorLaw, rng: &mut ChaCha12Rng) -> f64 {
    match law {
        ErrorLaw::Normal01 => rng.sample(StandardNormal),
        ErrorLaw::Laplace => {
            // Inverse CDF of the standard Laplace, density exp(-|e|)/2.
            let u: f64 = rng.sample(Open01);
            if u < 0.5 {
                (2.0 * u).ln()
            } else {
                -(2.0 * (1.0 - u)).ln()
            }
        }
        ErrorLaw::StudentT5 => rng.sample(StudentT::new(5.0).expect("valid dof")),
        ErrorLaw::Cauchy => rng.sample(StudentT::new(1.0).expect("valid dof")),
        ErrorLaw::Slash => {
            let z: f64 = rng.sample(StandardNormal);
            let u: f64 = rng.sample(OpenClosed01);
            z / u
        }
    }
}

/// Draws an `n x m` predictor matrix with i.i.d. rows from
/// `N_m(0, V)` where `V` has unit variances and constant correlation `rho`.
pub fn sample_predictors(n: usize, m: usize, rho: f64, seed: Seed) -> Result<Matrix> {
    let chol = equicorrelation_cholesky(m, rho)?;
    let mut rng = seed.rng();
    Ok(draw_predictors(n, m, &chol, &mut rng))
}

pub(crate) fn equicorrelation_cholesky(m: usize, rho: f64) -> Result<Matrix> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be >= 1".into()));
    }
    if m == 1 {
        // 1x1 covariance is [1] regardless of rho.
        return Ok(Matrix::new(1, 1, vec![1.0]).expect("unit"));
    }
    if !rho.is_finite() || rho >= 1.0 || rho <= -1.0 / (m as f64 - 1.0) {
        return Err(Error::InvalidCorrelation { m, rho });
    }
    let mut v = Matrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            v.set(i, j, if i == j { 1.0 } else { rho });
        }
    }
    cholesky_lower(&v).ok_or(Error::InvalidCorrelation { m, rho })
}

pub(crate) fn draw_predictors(
    n: usize,
    m: usize,
    chol: &Matrix,
    rng: &mut ChaCha12Rng,
) -> Matrix {
    let mut data = Vec::with_capacity(n * m);
    let mut z = vec![0.0; m];
    for _ in 0..n {
        for zj in z.iter_mut() {
            *zj = rng.sample(StandardNormal);
        }
        for i in 0..m {
            // Lower-triangular multiply, row by row.
            let mut s = 0.0;
            for j in 0..=i {
                s += chol.get(i, j) * z[j];
            }
            data.push(s);
        }
    }
    Matrix::new(n, m, data).expect("finite draws")
}
