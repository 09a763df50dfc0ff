//! Robust linear regression through adaptive modified maximum likelihood.
//!
//! The crate implements the RAMML estimator family: closed-form
//! modified-maximum-likelihood regression made resistant to vertical
//! outliers by residual-based weights and to leverage points by
//! L1-median-based predictor weights. It also ships the robust
//! initializers and comparison estimators (LTS, S, MM, OLS), the
//! long-tailed symmetric error law, performance criteria (MSE, SEP), and
//! a deterministic Monte-Carlo harness for contamination studies.

pub mod amml;
pub mod data;
pub mod distributions;
pub mod error;
pub mod evaluation;
pub mod initial;
pub mod numerics;
pub mod robust_location;
pub mod simulation;

pub use amml::{
    compute_alpha_delta, compute_delta_x, final_weights, fit, fit_from_initial, EstimatorConfig,
    FitResult, Initializer, Method, Variant, WeightSet,
};
pub use data::RegressionData;
pub use distributions::{ErrorLaw, LtsParams, Seed};
pub use error::{Error, Result};
pub use evaluation::{mse_coefficients, mse_scale, sep, SepReport};
pub use initial::{
    fit_lts, fit_lts_raw, fit_median_slope, fit_mm, fit_ols, fit_s, InitialFit, InitialMethod,
};
pub use numerics::Matrix;
pub use simulation::{
    generate_replication, make_true_model, run_cell, run_table, CellResult, EstimatorCellStats,
    EstimatorKind, ScenarioSpec, TrueModel,
};
