//! Sweep configuration: a flat TOML file whose axis keys may hold a
//! scalar or a list. Cells are the cross product of the axes, expanded
//! in the fixed order n, m, law, contamination, leverage, rho.

use serde::Deserialize;

use ramml::{ErrorLaw, EstimatorKind, ScenarioSpec, Seed};

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn values(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub seed: u64,
    pub n: OneOrMany<usize>,
    pub m: OneOrMany<usize>,
    pub law: OneOrMany<String>,
    pub contamination: OneOrMany<f64>,
    pub leverage: OneOrMany<f64>,
    #[serde(default = "default_rho")]
    pub rho: OneOrMany<f64>,
    #[serde(default = "default_n_rep")]
    pub n_rep: usize,
    #[serde(default = "default_p")]
    pub p: f64,
    pub estimators: Vec<String>,
    /// Optional default output path; the --output flag wins.
    #[serde(default)]
    pub output: Option<String>,
}

fn default_rho() -> OneOrMany<f64> {
    OneOrMany::One(0.0)
}

fn default_n_rep() -> usize {
    500
}

fn default_p() -> f64 {
    16.5
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Expands the cross product into per-cell scenario specs. Each cell
    /// gets a seed derived from the global seed and its index.
    pub fn expand(&self) -> Result<Vec<ScenarioSpec>, String> {
        let estimators = self
            .estimators
            .iter()
            .map(|s| EstimatorKind::parse(s))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| format!("key `estimators`: {e}"))?;
        if estimators.is_empty() {
            return Err("key `estimators`: need at least one estimator".into());
        }
        let laws = self
            .law
            .values()
            .iter()
            .map(|s| ErrorLaw::parse(s))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| format!("key `law`: {e}"))?;

        let seed = Seed(self.seed);
        let mut cells = Vec::new();
        for &n in &self.n.values() {
            for &m in &self.m.values() {
                for &law in &laws {
                    for &contamination in &self.contamination.values() {
                        for &leverage in &self.leverage.values() {
                            for &rho in &self.rho.values() {
                                let spec = ScenarioSpec {
                                    n,
                                    m,
                                    error_law: law,
                                    contamination,
                                    leverage_magnitude: leverage,
                                    rho,
                                    n_rep: self.n_rep,
                                    p: self.p,
                                    estimators: estimators.clone(),
                                    seed: seed.derive(&[cells.len() as u64]),
                                };
                                spec.validate().map_err(|e| {
                                    format!(
                                        "cell (n={n}, m={m}, law={}, contamination={contamination}, \
                                         leverage={leverage}, rho={rho}): {e}",
                                        law.name()
                                    )
                                })?;
                                cells.push(spec);
                            }
                        }
                    }
                }
            }
        }
        if cells.is_empty() {
            return Err("config expands to zero cells".into());
        }
        Ok(cells)
    }
}
