//! The `fit` subcommand: estimate, score, and report.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use ramml::initial::{tukey_weight, MM_TUNING, S_TUNING};
use ramml::{
    fit_from_initial, fit_lts, fit_mm, fit_ols, fit_s, final_weights, sep, EstimatorConfig,
    EstimatorKind, FitResult, InitialFit, Initializer, RegressionData, Seed, Variant,
};

use crate::exit;
use crate::input::{read_csv, InputError};

#[derive(Args)]
pub struct FitArgs {
    /// Input CSV file with a header row.
    #[arg(long)]
    pub input: PathBuf,

    /// Name of the response column.
    #[arg(long)]
    pub response: String,

    /// Comma-separated predictor columns (default: all other columns).
    #[arg(long, value_delimiter = ',')]
    pub predictors: Option<Vec<String>>,

    /// Comma-separated estimators to fit
    /// (mm, lts, s, ols, amml1, amml2, ramml1, ramml2).
    #[arg(long, value_delimiter = ',', default_value = "mm,lts,amml1,ramml1,s,amml2,ramml2")]
    pub estimators: Vec<String>,

    /// Shape tuning constant of the long-tailed symmetric law.
    #[arg(long, default_value_t = 16.5)]
    pub p: f64,

    /// Seed for the randomized initial-estimator searches.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// Trimming fraction for the trimmed standard error of prediction.
    #[arg(long, default_value_t = 0.10)]
    pub trim: f64,

    /// Output format.
    #[arg(long, default_value = "table", value_parser = ["table", "csv", "json"])]
    pub format: String,

    /// Also emit per-observation scaled residuals and final weights.
    #[arg(long)]
    pub diagnostics: bool,
}

#[derive(Serialize)]
struct EstimatorReport {
    estimator: String,
    intercept: f64,
    coefficients: Vec<f64>,
    scale: f64,
    sep: f64,
    sep_trim: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostics: Option<Vec<Diagnostic>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<FitResult>,
}

#[derive(Serialize)]
struct Diagnostic {
    index: usize,
    scaled_residual: f64,
    weight: f64,
}

pub fn run(args: &FitArgs) -> i32 {
    let dataset = match read_csv(&args.input, &args.response, args.predictors.as_deref()) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e}");
            return match e {
                InputError::FileNotFound(_) => exit::FILE_NOT_FOUND,
                InputError::Parse(_) => exit::PARSE_ERROR,
                InputError::NonNumeric(_) => exit::NON_NUMERIC,
            };
        }
    };

    let kinds = match args
        .estimators
        .iter()
        .map(|s| EstimatorKind::parse(s))
        .collect::<Result<Vec<_>, _>>()
    {
        Ok(k) => k,
        Err(e) => {
            eprintln!("error: {e}");
            return exit::USAGE;
        }
    };
    if !(0.0..0.5).contains(&args.trim) {
        eprintln!("error: trim fraction {} outside [0, 0.5)", args.trim);
        return exit::USAGE;
    }

    let mut reports = Vec::new();
    for kind in kinds {
        match fit_one(&dataset.data, kind, args) {
            Ok(report) => reports.push(report),
            Err(e) => {
                eprintln!("error: estimator {}: {e}", kind.name());
                return exit::ESTIMATOR_FAILURE;
            }
        }
    }

    match args.format.as_str() {
        "json" => print_json(&reports),
        "csv" => print_csv(&dataset.predictors, &reports, args.diagnostics),
        _ => print_table(&dataset.predictors, &reports, args.diagnostics),
    }
    exit::OK
}

fn fit_one(
    data: &RegressionData,
    kind: EstimatorKind,
    args: &FitArgs,
) -> Result<EstimatorReport, ramml::Error> {
    let seed = Seed(args.seed);
    let adaptive = |variant: Variant, initializer: Initializer| -> Result<_, ramml::Error> {
        let init = match initializer {
            Initializer::Lts => fit_lts(data, None, seed)?,
            Initializer::S => fit_s(data, seed)?,
        };
        let mut config = EstimatorConfig::new(variant, initializer, seed);
        config.p = args.p;
        fit_from_initial(data, &config, &init)
    };

    let (intercept, coefficients, scale, diag, fit_result) = match kind {
        EstimatorKind::Amml1
        | EstimatorKind::Amml2
        | EstimatorKind::Ramml1
        | EstimatorKind::Ramml2 => {
            let (variant, init) = match kind {
                EstimatorKind::Amml1 => (Variant::Amml, Initializer::Lts),
                EstimatorKind::Amml2 => (Variant::Amml, Initializer::S),
                EstimatorKind::Ramml1 => (Variant::Ramml, Initializer::Lts),
                _ => (Variant::Ramml, Initializer::S),
            };
            let fit = adaptive(variant, init)?;
            let diag = diagnostics_from(&fit.standardized_residuals, &final_weights(&fit));
            (
                fit.intercept,
                fit.coefficients.clone(),
                fit.scale,
                diag,
                Some(fit),
            )
        }
        _ => {
            let initial: InitialFit = match kind {
                EstimatorKind::Ols => fit_ols(data)?,
                EstimatorKind::Mm => fit_mm(data, seed)?,
                EstimatorKind::Lts => fit_lts(data, None, seed)?,
                EstimatorKind::S => fit_s(data, seed)?,
                _ => unreachable!(),
            };
            let res = initial.residuals(data);
            let scaled: Vec<f64> = if initial.scale > 0.0 {
                res.iter().map(|r| r / initial.scale).collect()
            } else {
                vec![0.0; res.len()]
            };
            let weights: Vec<f64> = match kind {
                EstimatorKind::Mm => scaled.iter().map(|&u| tukey_weight(u, MM_TUNING)).collect(),
                EstimatorKind::S => scaled.iter().map(|&u| tukey_weight(u, S_TUNING)).collect(),
                _ => vec![1.0; res.len()],
            };
            let diag = diagnostics_from(&scaled, &weights);
            (
                initial.intercept,
                initial.coefficients.clone(),
                initial.scale,
                diag,
                None,
            )
        }
    };

    let y_hat = data.predict(intercept, &coefficients);
    let report = sep(data.y(), &y_hat, args.trim);
    Ok(EstimatorReport {
        estimator: kind.name().to_string(),
        intercept,
        coefficients,
        scale,
        sep: report.sep,
        sep_trim: report.sep_trim,
        diagnostics: args.diagnostics.then_some(diag),
        fit: fit_result,
    })
}

fn diagnostics_from(scaled: &[f64], weights: &[f64]) -> Vec<Diagnostic> {
    scaled
        .iter()
        .zip(weights)
        .enumerate()
        .map(|(index, (&scaled_residual, &weight))| Diagnostic {
            index: index + 1,
            scaled_residual,
            weight,
        })
        .collect()
}

fn print_table(predictors: &[String], reports: &[EstimatorReport], diagnostics: bool) {
    let mut header = vec!["estimator".to_string(), "beta0".to_string()];
    header.extend(predictors.iter().map(|p| format!("beta[{p}]")));
    header.extend(["sigma", "SEP", "SEP_trim"].map(str::to_string));
    println!("{}", header.join("\t"));
    for r in reports {
        let mut cells = vec![r.estimator.clone(), format!("{:.4}", r.intercept)];
        cells.extend(r.coefficients.iter().map(|c| format!("{c:.4}")));
        cells.push(format!("{:.4}", r.scale));
        cells.push(format!("{:.4}", r.sep));
        cells.push(format!("{:.4}", r.sep_trim));
        println!("{}", cells.join("\t"));
    }
    if diagnostics {
        for r in reports {
            if let Some(diag) = &r.diagnostics {
                println!();
                println!("# diagnostics: {}", r.estimator);
                println!("index\tscaled_residual\tweight");
                for d in diag {
                    println!("{}\t{:.4}\t{:.4}", d.index, d.scaled_residual, d.weight);
                }
            }
        }
    }
}

fn print_csv(predictors: &[String], reports: &[EstimatorReport], diagnostics: bool) {
    let mut header = vec!["estimator".to_string(), "beta0".to_string()];
    header.extend(predictors.iter().map(|p| format!("beta_{p}")));
    header.extend(["sigma", "sep", "sep_trim"].map(str::to_string));
    println!("{}", header.join(","));
    for r in reports {
        let mut cells = vec![r.estimator.clone(), r.intercept.to_string()];
        cells.extend(r.coefficients.iter().map(f64::to_string));
        cells.push(r.scale.to_string());
        cells.push(r.sep.to_string());
        cells.push(r.sep_trim.to_string());
        println!("{}", cells.join(","));
    }
    if diagnostics {
        println!();
        println!("estimator,index,scaled_residual,weight");
        for r in reports {
            if let Some(diag) = &r.diagnostics {
                for d in diag {
                    println!("{},{},{},{}", r.estimator, d.index, d.scaled_residual, d.weight);
                }
            }
        }
    }
}

fn print_json(reports: &[EstimatorReport]) {
    println!(
        "{}",
        serde_json::to_string_pretty(reports).expect("serializable reports")
    );
}
