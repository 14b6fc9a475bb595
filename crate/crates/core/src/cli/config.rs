use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::dist::{ModelSpec, StarLaw, TailMeasure, TruncationPolicy};
use crate::open_paths::{McSettings, DEFAULT_NODE_BUDGET};

/// Largest truncation threshold accepted from a configuration.
pub const MAX_TAU: f64 = 1e-8;

/// Experiment description read from a TOML file. Keys may be written either
/// under `[section]` headers or flat as `section.key = value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub mc: McSection,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub critical: CriticalSection,
    #[serde(default)]
    pub coupling: CouplingSection,
    #[serde(default)]
    pub deviation: DeviationSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub m: u32,
    /// `(value, probability)` pairs of the star law.
    pub star: Vec<(u32, f64)>,
    pub p: Option<f64>,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub n_max: usize,
    pub tau: f64,
    pub measure: TailMeasure,
    pub support_cap: Option<usize>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            n_max: 200,
            tau: 1e-16,
            measure: TailMeasure::Weighted,
            support_cap: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McSection {
    pub count: u64,
    pub seed: u64,
    /// Left out of the manifest: outputs must not depend on it.
    #[serde(skip_serializing)]
    pub workers: usize,
    pub node_budget: u64,
}

impl Default for McSection {
    fn default() -> Self {
        Self {
            count: 100_000,
            seed: 1,
            workers: 1,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    /// Fixed κ window; the burn-in rule picks one per ε when absent.
    pub window: Option<(usize, usize)>,
    /// Accepted range of the slope of `log κ̂` against `log ε`.
    pub kappa_slope_band: (f64, f64),
    /// Accepted range of the critical log-log decay slopes.
    pub decay_band: (f64, f64),
    /// Largest accepted `max/min` of the critical running product over `n^2`.
    pub spread_max: f64,
}

impl Default for FitSection {
    fn default() -> Self {
        Self {
            window: None,
            kappa_slope_band: (0.35, 0.70),
            decay_band: (-2.6, -1.5),
            spread_max: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub epsilons: Vec<f64>,
    /// Threshold for the sweep's own runs. Exponential decay has to be
    /// followed far below double-precision relative resolution.
    pub tau: f64,
    pub n_cap: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            epsilons: vec![0.04, 0.02, 0.01, 0.005],
            tau: 1e-280,
            n_cap: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CriticalSection {
    pub n_max: usize,
    pub slope_window: (usize, usize),
    pub product_window: (usize, usize),
    /// `|δ_n|` is checked for `n <= delta_horizon`.
    pub delta_horizon: usize,
    pub delta_tol: f64,
}

impl Default for CriticalSection {
    fn default() -> Self {
        Self {
            n_max: 2000,
            slope_window: (200, 1000),
            product_window: (200, 2000),
            delta_horizon: 100,
            delta_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CouplingSection {
    pub tau: f64,
    /// Depth of the optional sampled cross-check.
    pub mc_depth: Option<u32>,
}

impl Default for CouplingSection {
    fn default() -> Self {
        Self {
            tau: 1e-280,
            mc_depth: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviationSection {
    pub n: u32,
    pub j: u32,
    /// Levels of the conditional table; `[n, j n]` when empty.
    pub alphas: Vec<u64>,
}

impl Default for DeviationSection {
    fn default() -> Self {
        Self {
            n: 16,
            j: 4,
            alphas: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Left out of the manifest so that runs into different directories
    /// can be compared byte for byte.
    #[serde(skip_serializing)]
    pub dir: PathBuf,
    pub format: OutputFormat,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("drlab-out"),
            format: OutputFormat::Csv,
        }
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn check_tau(name: &str, tau: f64) -> Result<(), CliError> {
    if !(0.0..=MAX_TAU).contains(&tau) {
        return Err(bad(format!("{name} = {tau} outside [0, {MAX_TAU}]")));
    }
    Ok(())
}

fn check_band(name: &str, (lo, hi): (f64, f64)) -> Result<(), CliError> {
    if !(lo <= hi) {
        return Err(bad(format!(
            "{name} = [{lo}, {hi}] is not a closed interval"
        )));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        match (self.model.p, self.model.epsilon) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => return Err(bad("give exactly one of model.p and model.epsilon")),
        }
        check_tau("run.tau", self.run.tau)?;
        check_tau("sweep.tau", self.sweep.tau)?;
        check_tau("coupling.tau", self.coupling.tau)?;
        if self.mc.count == 0 {
            return Err(bad("mc.count must be >= 1"));
        }
        if self.mc.workers == 0 {
            return Err(bad("mc.workers must be >= 1"));
        }
        check_band("fit.kappa_slope_band", self.fit.kappa_slope_band)?;
        check_band("fit.decay_band", self.fit.decay_band)?;
        if self.deviation.j == 0 {
            return Err(bad("deviation.j must be >= 1"));
        }
        self.spec().map(|_| ())
    }

    pub fn star(&self) -> Result<StarLaw, CliError> {
        Ok(StarLaw::new(self.model.star.iter().copied())?)
    }

    pub fn spec(&self) -> Result<ModelSpec, CliError> {
        let star = self.star()?;
        Ok(match (self.model.p, self.model.epsilon) {
            (Some(p), _) => ModelSpec::new(self.model.m, star, p)?,
            (None, Some(eps)) => ModelSpec::with_epsilon(self.model.m, star, eps)?,
            (None, None) => return Err(bad("give exactly one of model.p and model.epsilon")),
        })
    }

    pub fn policy(&self) -> TruncationPolicy {
        TruncationPolicy {
            tau: self.run.tau,
            measure: self.run.measure,
            max_support: self.run.support_cap,
        }
    }

    pub fn sweep_policy(&self) -> TruncationPolicy {
        TruncationPolicy {
            tau: self.sweep.tau,
            ..self.policy()
        }
    }

    pub fn coupling_policy(&self) -> TruncationPolicy {
        TruncationPolicy {
            tau: self.coupling.tau,
            ..self.policy()
        }
    }

    pub fn mc_settings(&self) -> McSettings {
        McSettings {
            count: self.mc.count,
            seed: self.mc.seed,
            workers: self.mc.workers,
            node_budget: self.mc.node_budget,
        }
    }

    pub fn alphas(&self) -> Vec<u64> {
        if self.deviation.alphas.is_empty() {
            let n = u64::from(self.deviation.n);
            vec![n, u64::from(self.deviation.j) * n]
        } else {
            self.deviation.alphas.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_and_sectioned_forms_agree() {
        let flat = "model.m = 2\nmodel.star = [[2, 1.0]]\nmodel.p = 0.1\nrun.n_max = 50\n";
        let sectioned = "[model]\nm = 2\nstar = [[2, 1.0]]\np = 0.1\n[run]\nn_max = 50\n";
        let a = ExperimentConfig::parse(flat).unwrap();
        assert_eq!(a, ExperimentConfig::parse(sectioned).unwrap());
        assert_eq!(a.run.n_max, 50);
        assert_eq!(a.run.tau, 1e-16);
        assert_eq!(a.sweep.tau, 1e-280);
    }

    #[test]
    fn rejects_bad_configs() {
        let base = "model.m = 2\nmodel.star = [[2, 1.0]]\n";
        let both = format!("{base}model.p = 0.1\nmodel.epsilon = 0.1\n");
        let neither = base.to_string();
        let tau = format!("{base}model.p = 0.1\nrun.tau = 1e-3\n");
        let count = format!("{base}model.p = 0.1\nmc.count = 0\n");
        let band = format!("{base}model.p = 0.1\nfit.decay_band = [1.0, 0.0]\n");
        let unknown = format!("{base}model.p = 0.1\nrun.bogus = 1\n");
        for text in [both, neither, tau, count, band, unknown] {
            assert!(
                matches!(ExperimentConfig::parse(&text), Err(CliError::Config(_))),
                "{text}"
            );
        }
        let degenerate = "model.m = 2\nmodel.star = [[1, 1.0]]\nmodel.p = 0.1\n";
        let err = ExperimentConfig::parse(degenerate).unwrap_err();
        assert!(err.to_string().contains("P(X* >= 2) > 0 required"), "{err}");
    }

    #[test]
    fn epsilon_form() {
        let cfg = ExperimentConfig::parse(
            "model.m = 2\nmodel.star = [[1, 0.5], [2, 0.5]]\nmodel.epsilon = 0.1\n",
        )
        .unwrap();
        let spec = cfg.spec().unwrap();
        assert!((spec.p() - (1.0 / 3.0 - 0.1)).abs() < 1e-15);
    }
}
