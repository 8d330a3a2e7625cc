//! Experiment configuration, read from a single JSON document.

use std::fmt;
use std::path::{Path, PathBuf};

use gbcal_core::dgp::LogisticTarget;
use gbcal_core::lrate::{default_grid, GpcConfig, HolmesWalkerConfig, Method};
use serde::{Deserialize, Serialize};

use crate::BenchError;

pub const SEED_ENV: &str = "GBCAL_BASE_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    ToyCurve,
    LinearDependent,
    LinearT,
    LogisticMcid,
    GibbsMcid,
}

impl Experiment {
    pub fn id(&self) -> u64 {
        match self {
            Experiment::ToyCurve => 0,
            Experiment::LinearDependent => 1,
            Experiment::LinearT => 2,
            Experiment::LogisticMcid => 3,
            Experiment::GibbsMcid => 4,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::ToyCurve => "toy_curve",
            Experiment::LinearDependent => "linear_dependent",
            Experiment::LinearT => "linear_t",
            Experiment::LogisticMcid => "logistic_mcid",
            Experiment::GibbsMcid => "gibbs_mcid",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Normal prior for the toy location model; absent means flat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalPrior {
    pub mean: f64,
    pub var: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToyOptions {
    pub sigma: f64,
    pub theta_star: f64,
    pub prior: Option<NormalPrior>,
}

impl Default for ToyOptions {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            theta_star: 0.0,
            prior: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LyddonOptions {
    /// Include σ² alongside β in the linear model's trace ratio.
    pub full_parameter: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogisticOptions {
    pub burn_in: usize,
    /// Chain used inside GPC's bootstrap loop.
    pub gpc_burn_in: usize,
    pub gpc_chain_length: usize,
    pub smc_particles: usize,
    pub smc_moves: usize,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        Self {
            burn_in: 1000,
            gpc_burn_in: 200,
            gpc_chain_length: 500,
            smc_particles: 500,
            smc_moves: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Misspecification degrees (1–3), or η* values for the toy curve.
    pub degrees: Vec<f64>,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub methods: Vec<Method>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub gpc: GpcConfig,
    #[serde(default = "default_grid")]
    pub safebayes_grid: Vec<f64>,
    #[serde(default)]
    pub holmes_walker: HolmesWalkerConfig,
    #[serde(default)]
    pub lyddon: LyddonOptions,
    /// Posterior sample size for sampled posteriors.
    #[serde(default = "default_draws")]
    pub posterior_draws: usize,
    #[serde(default)]
    pub toy: ToyOptions,
    #[serde(default)]
    pub logistic: LogisticOptions,
    #[serde(default)]
    pub logistic_target: LogisticTarget,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    pub out_path: PathBuf,
    /// Write wall-clock milliseconds; off keeps outputs byte-reproducible.
    #[serde(default)]
    pub record_timing: bool,
}

fn default_alpha() -> f64 {
    0.05
}

fn default_draws() -> usize {
    2000
}

fn default_workers() -> usize {
    1
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads, applies the seed override from the environment, and validates.
    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let Ok(seed) = std::env::var(SEED_ENV) {
            cfg.base_seed = seed
                .trim()
                .parse()
                .map_err(|_| BenchError::Config(format!("{SEED_ENV}={seed:?} is not a u64")))?;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let fail = |msg: String| Err(BenchError::Config(msg));
        if self.replications == 0 {
            return fail("replications must be at least 1".into());
        }
        if self.degrees.is_empty() || self.sample_sizes.is_empty() || self.methods.is_empty() {
            return fail("degrees, sample_sizes and methods must be non-empty".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail(format!("alpha {} outside (0, 1)", self.alpha));
        }
        if self.gpc.alpha != self.alpha {
            return fail(format!(
                "gpc.alpha {} differs from alpha {}",
                self.gpc.alpha, self.alpha
            ));
        }
        self.gpc
            .validate()
            .map_err(|e| BenchError::Config(e.to_string()))?;
        if self.workers == 0 {
            return fail("workers must be at least 1".into());
        }
        if self.posterior_draws < gbcal_core::posterior::MIN_DRAWS {
            return fail(format!(
                "posterior_draws must be at least {}",
                gbcal_core::posterior::MIN_DRAWS
            ));
        }
        if let Some(&n) = self.sample_sizes.iter().find(|&&n| n < 10) {
            return fail(format!("sample size {n} below 10"));
        }
        let mut seen = Vec::new();
        for m in &self.methods {
            if seen.contains(m) {
                return fail(format!("method {m} listed twice"));
            }
            seen.push(*m);
        }
        if self.experiment == Experiment::GibbsMcid {
            if let Some(m) = self.methods.iter().find(|m| m.needs_derivatives()) {
                return fail(format!(
                    "{m} needs a differentiable model and cannot run on gibbs_mcid"
                ));
            }
        }
        for &d in &self.degrees {
            let ok = match self.experiment {
                Experiment::ToyCurve => d > 0.0 && d.is_finite(),
                _ => [1.0, 2.0, 3.0].contains(&d),
            };
            if !ok {
                return fail(format!("degree {d} invalid for {}", self.experiment));
            }
        }
        if self.safebayes_grid.is_empty()
            || self.safebayes_grid.iter().any(|&e| !(e > 0.0 && e <= 1.0))
        {
            return fail("safebayes_grid must be non-empty and inside (0, 1]".into());
        }
        if self.toy.sigma <= 0.0 || self.toy.prior.is_some_and(|p| !(p.var > 0.0)) {
            return fail("toy sigma and prior variance must be positive".into());
        }
        Ok(())
    }

    /// Rows the finished output holds.
    pub fn expected_rows(&self) -> usize {
        self.degrees.len() * self.sample_sizes.len() * self.replications * self.methods.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"experiment": "toy_curve", "degrees": [0.5], "sample_sizes": [50],
        "replications": 2, "methods": ["Lyddon"], "out_path": "x.csv"}"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.alpha, 0.05);
        assert_eq!(cfg.gpc.bootstrap, 100);
        assert_eq!(cfg.safebayes_grid.len(), 20);
        assert_eq!(cfg.expected_rows(), 2);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = MINIMAL.replace("\"replications\"", "\"replicatons\": 3, \"replications\"");
        assert!(matches!(
            ExperimentConfig::from_json(&text),
            Err(BenchError::Config(_))
        ));
        let nested = MINIMAL.replace(
            "\"replications\"",
            "\"gpc\": {\"bootstrp\": 3}, \"replications\"",
        );
        assert!(ExperimentConfig::from_json(&nested).is_err());
    }

    #[test]
    fn gibbs_rejects_derivative_methods() {
        let text = r#"{"experiment": "gibbs_mcid", "degrees": [1], "sample_sizes": [50],
            "replications": 1, "methods": ["GPC", "Lyddon"], "out_path": "x.csv"}"#;
        assert!(ExperimentConfig::from_json(text).is_err());
    }
}
