//! Monte-Carlo engine: contaminated scenario generation, estimator
//! sweeps, and MSE aggregation.
//!
//! Every replication draws from its own substream keyed by
//! `(seed, replication index)`, and every randomized fit inside a
//! replication gets a further derived seed, so results are bit-identical
//! no matter how many workers run the sweep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amml::{fit_from_initial, EstimatorConfig, Initializer, Variant};
use crate::data::RegressionData;
use crate::distributions::{draw_error, equicorrelation_cholesky, draw_predictors, ErrorLaw, Seed};
use crate::error::{Error, Result};
use crate::evaluation::{mse_coefficients, mse_scale};
use crate::initial::{fit_lts, fit_mm, fit_ols, fit_s, InitialFit};

/// Estimators the harness can sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Ols,
    Mm,
    Lts,
    S,
    Amml1,
    Amml2,
    Ramml1,
    Ramml2,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 8] = [
        EstimatorKind::Ols,
        EstimatorKind::Mm,
        EstimatorKind::Lts,
        EstimatorKind::S,
        EstimatorKind::Amml1,
        EstimatorKind::Amml2,
        EstimatorKind::Ramml1,
        EstimatorKind::Ramml2,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Ols => "ols",
            EstimatorKind::Mm => "mm",
            EstimatorKind::Lts => "lts",
            EstimatorKind::S => "s",
            EstimatorKind::Amml1 => "amml1",
            EstimatorKind::Amml2 => "amml2",
            EstimatorKind::Ramml1 => "ramml1",
            EstimatorKind::Ramml2 => "ramml2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ols" | "ls" => Ok(EstimatorKind::Ols),
            "mm" => Ok(EstimatorKind::Mm),
            "lts" => Ok(EstimatorKind::Lts),
            "s" => Ok(EstimatorKind::S),
            "amml1" => Ok(EstimatorKind::Amml1),
            "amml2" => Ok(EstimatorKind::Amml2),
            "ramml1" => Ok(EstimatorKind::Ramml1),
            "ramml2" => Ok(EstimatorKind::Ramml2),
            other => Err(Error::InvalidArgument(format!("unknown estimator `{other}`"))),
        }
    }
}

/// One Monte-Carlo cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub n: usize,
    pub m: usize,
    pub error_law: ErrorLaw,
    /// Fraction of leverage-contaminated observations.
    pub contamination: f64,
    /// Magnitude of the contaminated predictor rows.
    pub leverage_magnitude: f64,
    pub rho: f64,
    pub n_rep: usize,
    pub p: f64,
    pub estimators: Vec<EstimatorKind>,
    pub seed: Seed,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n <= self.m + 1 {
            return Err(Error::TooFewObservations { n: self.n, m: self.m });
        }
        if !(0.0..1.0).contains(&self.contamination) {
            return Err(Error::InvalidArgument(format!(
                "contamination {} outside [0, 1)",
                self.contamination
            )));
        }
        if self.contamination > 0.0 && !(self.leverage_magnitude > 0.0) {
            return Err(Error::InvalidArgument(
                "leverage magnitude must be positive under contamination".into(),
            ));
        }
        if self.n_rep == 0 {
            return Err(Error::InvalidArgument("n_rep must be >= 1".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidArgument("estimator set is empty".into()));
        }
        equicorrelation_cholesky(self.m, self.rho)?;
        Ok(())
    }

    /// Number of replaced observations, `floor(contamination * n)`.
    pub fn n_out(&self) -> usize {
        (self.contamination * self.n as f64).floor() as usize
    }
}

/// Ground truth of the simulation model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueModel {
    pub beta0: f64,
    pub beta: Vec<f64>,
    /// Unit direction of the contaminated responses, orthogonal to `beta`.
    pub a: Vec<f64>,
}

/// Builds the simulation truth: `beta_j = 1/sqrt(m)` and the leverage
/// response direction `a = normalize(nu - (nu' beta) beta)` where `nu`
/// alternates signs; for `m = 1` the direction is `-1`.
pub fn make_true_model(m: usize) -> Result<TrueModel> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be >= 1".into()));
    }
    let beta = vec![1.0 / (m as f64).sqrt(); m];
    if m == 1 {
        return Ok(TrueModel {
            beta0: 0.0,
            beta,
            a: vec![-1.0],
        });
    }
    // nu_j = (-1)^j with j starting at 1.
    let nu: Vec<f64> = (1..=m).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let proj: f64 = nu.iter().zip(&beta).map(|(n, b)| n * b).sum();
    let mut a: Vec<f64> = nu.iter().zip(&beta).map(|(n, b)| n - proj * b).collect();
    let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::DegenerateDirection);
    }
    for v in &mut a {
        *v /= norm;
    }
    Ok(TrueModel { beta0: 0.0, beta, a })
}

/// Draws one replication: clean data first, then the first `n_out` rows
/// replaced by leverage points `x_i = (l, ..., l)` with exact responses
/// `y_i = x_i' a`. Clean rows are untouched by the contamination step, so
/// the suffix matches the uncontaminated draw from the same substream.
pub fn generate_replication(
    spec: &ScenarioSpec,
    model: &TrueModel,
    rep_index: usize,
) -> Result<RegressionData> {
    let chol = equicorrelation_cholesky(spec.m, spec.rho)?;
    let mut rng = spec.seed.derive(&[0x5EED, rep_index as u64]).rng();
    let mut x = draw_predictors(spec.n, spec.m, &chol, &mut rng);
    let mut y: Vec<f64> = (0..spec.n)
        .map(|i| {
            let xb: f64 = x.row(i).iter().zip(&model.beta).map(|(a, b)| a * b).sum();
            model.beta0 + xb + draw_error(spec.error_law, &mut rng)
        })
        .collect();

    let ell = spec.leverage_magnitude;
    let a_sum: f64 = model.a.iter().sum();
    for i in 0..spec.n_out() {
        for j in 0..spec.m {
            x.set(i, j, ell);
        }
        y[i] = ell * a_sum;
    }
    RegressionData::new(y, x)
}

/// Per-estimator aggregate over one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorCellStats {
    pub estimator: EstimatorKind,
    pub mse_beta: f64,
    pub mse_sigma: f64,
    /// Replications that converged and entered the averages.
    pub used: usize,
    /// Replications excluded for non-convergence or estimator failure.
    pub failures: usize,
}

/// Result of one Monte-Carlo cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub scenario: ScenarioSpec,
    pub stats: Vec<EstimatorCellStats>,
}

struct RepOutcome {
    per_estimator: Vec<Option<(Vec<f64>, f64)>>,
}

/// Runs every requested estimator over `n_rep` replications and
/// aggregates coefficient and scale MSE against the model truth
/// (scale truth 1, meaningful for the standard-normal error law).
/// Failed or non-converged fits are excluded and counted.
pub fn run_cell(spec: &ScenarioSpec) -> Result<CellResult> {
    spec.validate()?;
    let model = make_true_model(spec.m)?;

    let outcomes: Vec<RepOutcome> = (0..spec.n_rep)
        .into_par_iter()
        .map(|rep| run_replication(spec, &model, rep))
        .collect::<Result<Vec<_>>>()?;

    let mut stats = Vec::with_capacity(spec.estimators.len());
    for (e_idx, &estimator) in spec.estimators.iter().enumerate() {
        let mut betas: Vec<Vec<f64>> = Vec::with_capacity(spec.n_rep);
        let mut sigmas: Vec<f64> = Vec::with_capacity(spec.n_rep);
        let mut failures = 0usize;
        for outcome in &outcomes {
            match &outcome.per_estimator[e_idx] {
                Some((beta, sigma)) => {
                    betas.push(beta.clone());
                    sigmas.push(*sigma);
                }
                None => failures += 1,
            }
        }
        let (mse_beta, mse_sigma) = if betas.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            (mse_coefficients(&betas, &model.beta), mse_scale(&sigmas, 1.0))
        };
        stats.push(EstimatorCellStats {
            estimator,
            mse_beta,
            mse_sigma,
            used: betas.len(),
            failures,
        });
    }
    Ok(CellResult {
        scenario: spec.clone(),
        stats,
    })
}

fn run_replication(spec: &ScenarioSpec, model: &TrueModel, rep: usize) -> Result<RepOutcome> {
    let data = generate_replication(spec, model, rep)?;
    let rep64 = rep as u64;

    // The AMML/RAMML variants share initializer fits with the LTS and S
    // comparison columns, one randomized search per family.
    let needs_lts = spec.estimators.iter().any(|e| {
        matches!(
            e,
            EstimatorKind::Lts | EstimatorKind::Amml1 | EstimatorKind::Ramml1
        )
    });
    let needs_s = spec.estimators.iter().any(|e| {
        matches!(
            e,
            EstimatorKind::S | EstimatorKind::Mm | EstimatorKind::Amml2 | EstimatorKind::Ramml2
        )
    });
    let lts_fit = if needs_lts {
        Some(fit_lts(&data, None, spec.seed.derive(&[1, rep64])))
    } else {
        None
    };
    let s_fit = if needs_s {
        Some(fit_s(&data, spec.seed.derive(&[2, rep64])))
    } else {
        None
    };

    let adaptive = |variant: Variant, initializer: Initializer| -> Option<(Vec<f64>, f64)> {
        let init = match initializer {
            Initializer::Lts => lts_fit.as_ref(),
            Initializer::S => s_fit.as_ref(),
        }?;
        let init = init.as_ref().ok()?;
        let mut config = EstimatorConfig::new(variant, initializer, spec.seed);
        config.p = spec.p;
        let fit = fit_from_initial(&data, &config, init).ok()?;
        Some((fit.coefficients, fit.scale))
    };
    let from_initial = |fit: &std::result::Result<InitialFit, Error>| -> Option<(Vec<f64>, f64)> {
        match fit {
            Ok(f) if f.converged => Some((f.coefficients.clone(), f.scale)),
            _ => None,
        }
    };

    let per_estimator = spec
        .estimators
        .iter()
        .map(|estimator| match estimator {
            EstimatorKind::Ols => fit_ols(&data)
                .ok()
                .map(|f| (f.coefficients, f.scale)),
            EstimatorKind::Mm => fit_mm(&data, spec.seed.derive(&[2, rep64]))
                .ok()
                .filter(|f| f.converged)
                .map(|f| (f.coefficients, f.scale)),
            EstimatorKind::Lts => from_initial(lts_fit.as_ref().expect("lts requested")),
            EstimatorKind::S => from_initial(s_fit.as_ref().expect("s requested")),
            EstimatorKind::Amml1 => adaptive(Variant::Amml, Initializer::Lts),
            EstimatorKind::Amml2 => adaptive(Variant::Amml, Initializer::S),
            EstimatorKind::Ramml1 => adaptive(Variant::Ramml, Initializer::Lts),
            EstimatorKind::Ramml2 => adaptive(Variant::Ramml, Initializer::S),
        })
        .collect();
    Ok(RepOutcome { per_estimator })
}

/// Maps [`run_cell`] over a list of cells; output order matches input
/// order.
pub fn run_table(specs: &[ScenarioSpec]) -> Result<Vec<CellResult>> {
    specs.iter().map(run_cell).collect()
}
