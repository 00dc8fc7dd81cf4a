//! TOML run configuration shared by the `evaluate`, `verify` and
//! `optimize` commands.
//!
//! ```toml
//! schema_version = 1
//! alphas = [0.5]
//!
//! [model]
//! kind = "compound_poisson"
//! zeta = 1.0
//! rate = 1.5
//! jumps = { kind = "exponential", rate = 1.0 }
//!
//! [policy]
//! lambda = 2.0
//! tau = 0.5
//! release_rate = 2.0
//! capacity = 4.0          # omit or `inf` for no capacity
//! fill = "plain"          # or "reflected"
//!
//! [costs]
//! k1 = 1.0
//! k2 = 0.5
//! r = 0.3
//! g = { breaks = [0.0, 1.0], pieces = [[1.0], [1.0, 0.5], [1.5]] }
//! g_star = { breaks = [2.0], pieces = [[0.2, 0.1], [0.4]] }
//! ```
//!
//! Unknown keys are rejected; parse errors carry the offending line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{DamError, Result};
use crate::levy::{JumpDistribution, LevyModel};
use crate::policy::{CostSpec, DamProblem, FillMode, PiecewisePolynomial, PolicyParams};
use crate::scale::{ScaleMethod, ScaleOptions};
use crate::series::SeriesOptions;
use crate::talbot::DEFAULT_TALBOT_NODES;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Brownian { mu: f64, sigma2: f64 },
    CompoundPoisson { zeta: f64, rate: f64, jumps: JumpSpec },
    Gamma { zeta: f64, a: f64, b: f64 },
    InverseGaussian { zeta: f64, sigma: f64, c: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpSpec {
    Exponential { rate: f64 },
    HyperExponential { weights: Vec<f64>, rates: Vec<f64> },
}

impl ModelSpec {
    pub fn build(&self) -> Result<LevyModel> {
        match self {
            ModelSpec::Brownian { mu, sigma2 } => LevyModel::brownian(*mu, *sigma2),
            ModelSpec::CompoundPoisson { zeta, rate, jumps } => {
                let jumps = match jumps {
                    JumpSpec::Exponential { rate } => JumpDistribution::Exponential { rate: *rate },
                    JumpSpec::HyperExponential { weights, rates } => JumpDistribution::HyperExponential {
                        weights: weights.clone(),
                        rates: rates.clone(),
                    },
                };
                LevyModel::compound_poisson(*zeta, *rate, jumps)
            }
            ModelSpec::Gamma { zeta, a, b } => LevyModel::gamma(*zeta, *a, *b),
            ModelSpec::InverseGaussian { zeta, sigma, c } => LevyModel::inverse_gaussian(*zeta, *sigma, *c),
        }
    }
}

fn infinite() -> f64 {
    f64::INFINITY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    pub lambda: f64,
    pub tau: f64,
    pub release_rate: f64,
    #[serde(default = "infinite")]
    pub capacity: f64,
    pub fill: FillMode,
    /// Initial content; defaults to `tau`.
    #[serde(default)]
    pub start: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolySpec {
    #[serde(default)]
    pub breaks: Vec<f64>,
    pub pieces: Vec<Vec<f64>>,
}

impl PolySpec {
    fn build(&self, name: &str) -> Result<PiecewisePolynomial> {
        PiecewisePolynomial::new(self.breaks.clone(), self.pieces.clone())
            .map_err(|e| DamError::Config(format!("costs.{name}: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostsSpec {
    #[serde(default)]
    pub k1: f64,
    #[serde(default)]
    pub k2: f64,
    #[serde(default)]
    pub r: f64,
    #[serde(default)]
    pub g: Option<PolySpec>,
    #[serde(default)]
    pub g_star: Option<PolySpec>,
}

impl CostsSpec {
    pub fn build(&self) -> Result<CostSpec> {
        let poly = |p: &Option<PolySpec>, name| match p {
            Some(p) => p.build(name),
            None => Ok(PiecewisePolynomial::zero()),
        };
        CostSpec::new(self.k1, self.k2, self.r, poly(&self.g, "g")?, poly(&self.g_star, "g_star")?)
    }
}

fn default_n_paths() -> usize {
    10_000
}
fn default_time_step() -> f64 {
    1e-3
}
fn default_tolerance() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    /// Paths per phase-level check and cycles for the cycle checks.
    #[serde(default = "default_n_paths")]
    pub n_paths: usize,
    /// Paths for the infinite-horizon discounted cost; defaults to `n_paths / 5`.
    #[serde(default)]
    pub total_paths: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_time_step")]
    pub time_step: f64,
    /// A check passes when `|analytic − MC| ≤ tolerance_se × SE`.
    #[serde(default = "default_tolerance")]
    pub tolerance_se: f64,
    /// Simulated time per path for the phase and cycle checks (default
    /// 1000). Discounted totals pick their own horizon from `α`.
    #[serde(default)]
    pub horizon: Option<f64>,
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self {
            n_paths: default_n_paths(),
            total_paths: None,
            seed: 0,
            time_step: default_time_step(),
            tolerance_se: default_tolerance(),
            horizon: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl RangeSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.steps <= 1 || self.max == self.min {
            return vec![self.min];
        }
        let h = (self.max - self.min) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.min + i as f64 * h).collect()
    }

    pub fn spacing(&self) -> f64 {
        if self.steps <= 1 {
            0.0
        } else {
            (self.max - self.min) / (self.steps - 1) as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    LongRunAverage,
    Discounted,
}

fn default_rounds() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSpec {
    pub lambda: RangeSpec,
    pub tau: RangeSpec,
    pub objective: Objective,
    /// Discount rate for the `discounted` objective.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default = "default_rounds")]
    pub refine_rounds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSpec {
    #[serde(default)]
    pub method: Option<ScaleMethod>,
    #[serde(default = "default_talbot")]
    pub talbot_nodes: usize,
    #[serde(default = "default_series_x_max")]
    pub series_x_max: f64,
}

fn default_talbot() -> usize {
    DEFAULT_TALBOT_NODES
}
fn default_series_x_max() -> f64 {
    SeriesOptions::default().x_max
}

impl Default for NumericsSpec {
    fn default() -> Self {
        Self {
            method: None,
            talbot_nodes: default_talbot(),
            series_x_max: default_series_x_max(),
        }
    }
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("levy-dam-out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    /// Optional JSON-lines dump of every simulated cycle during `verify`.
    #[serde(default)]
    pub cycle_dump: Option<PathBuf>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
            cycle_dump: None,
        }
    }
}

fn default_alphas() -> Vec<f64> {
    vec![0.5]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// Discount rates for the discounted quantities.
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    pub model: ModelSpec,
    pub policy: PolicySpec,
    #[serde(default)]
    pub costs: CostsSpec,
    #[serde(default)]
    pub verify: Option<VerifySpec>,
    #[serde(default)]
    pub optimize: Option<OptimizeSpec>,
    #[serde(default)]
    pub numerics: NumericsSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| DamError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DamError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            DamError::Config(msg) => DamError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(DamError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(DamError::Config(format!("alphas: every discount rate must be > 0, got {a}")));
        }
        self.model.build().map_err(|e| DamError::Config(format!("model: {e}")))?;
        self.policy_params().map_err(|e| DamError::Config(format!("policy: {e}")))?;
        self.costs.build().map_err(|e| DamError::Config(format!("costs: {e}")))?;
        if let Some(s) = self.policy.start {
            if !(s <= self.policy.capacity) || (self.policy.fill == FillMode::Reflected && s < 0.0) {
                return Err(DamError::Config(format!("policy.start = {s} lies outside the content range")));
            }
        }
        if let Some(v) = &self.verify {
            if v.n_paths < 2 || !(v.time_step > 0.0) || !(v.tolerance_se > 0.0) {
                return Err(DamError::Config(
                    "verify: need n_paths >= 2, time_step > 0 and tolerance_se > 0".into(),
                ));
            }
        }
        if let Some(o) = &self.optimize {
            for (name, r) in [("lambda", o.lambda), ("tau", o.tau)] {
                if !(r.min <= r.max) || r.steps == 0 || !r.min.is_finite() || !r.max.is_finite() {
                    return Err(DamError::Config(format!(
                        "optimize.{name}: need finite min <= max and steps >= 1"
                    )));
                }
            }
            if o.objective == Objective::Discounted && !o.alpha.is_some_and(|a| a > 0.0) {
                return Err(DamError::Config(
                    "optimize.alpha must be set and positive for the discounted objective".into(),
                ));
            }
        }
        if self.numerics.talbot_nodes < 4 || !(self.numerics.series_x_max > 0.0) {
            return Err(DamError::Config("numerics: need talbot_nodes >= 4 and series_x_max > 0".into()));
        }
        Ok(())
    }

    pub fn policy_params(&self) -> Result<PolicyParams> {
        let p = &self.policy;
        PolicyParams::new(p.lambda, p.tau, p.release_rate, p.capacity)
    }

    pub fn start(&self) -> f64 {
        self.policy.start.unwrap_or(self.policy.tau)
    }

    pub fn scale_options(&self) -> ScaleOptions {
        ScaleOptions {
            talbot_nodes: self.numerics.talbot_nodes,
            series: SeriesOptions {
                x_max: self.numerics.series_x_max,
                ..SeriesOptions::default()
            },
        }
    }

    pub fn problem(&self) -> Result<DamProblem> {
        let mut p = DamProblem::new(
            self.model.build()?,
            self.policy_params()?,
            self.costs.build()?,
            self.policy.fill,
        )?;
        p.scale_method = self.numerics.method;
        p.scale_options = self.scale_options();
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
schema_version = 1

[model]
kind = "brownian"
mu = 1.0
sigma2 = 1.0

[policy]
lambda = 2.0
tau = 0.0
release_rate = 2.0
capacity = 4.0
fill = "plain"
"#;

    #[test]
    fn parses_minimal_config() {
        let c = RunConfig::from_toml(BASE).unwrap();
        assert_eq!(c.alphas, vec![0.5]);
        assert_eq!(c.start(), 0.0);
        assert!(c.costs.build().unwrap().g.is_zero());
        assert!(c.problem().is_ok());
    }

    #[test]
    fn unknown_key_reports_line() {
        let text = BASE.replace("mu = 1.0", "mu = 1.0\ndrift = 2.0");
        let err = RunConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("line") && err.contains("drift"), "{err}");
    }

    #[test]
    fn semantic_errors_are_config_errors() {
        let text = BASE.replace("tau = 0.0", "tau = 3.0");
        assert!(matches!(RunConfig::from_toml(&text), Err(DamError::Config(_))));
        let text = BASE.replace("schema_version = 1", "schema_version = 2");
        assert!(matches!(RunConfig::from_toml(&text), Err(DamError::Config(_))));
    }

    #[test]
    fn infinite_capacity_and_ranges() {
        let text = BASE.replace("capacity = 4.0", "capacity = inf");
        assert!(RunConfig::from_toml(&text).unwrap().policy.capacity.is_infinite());
        let r = RangeSpec {
            min: 1.0,
            max: 2.0,
            steps: 5,
        };
        assert_eq!(r.values(), vec![1.0, 1.25, 1.5, 1.75, 2.0]);
    }
}
