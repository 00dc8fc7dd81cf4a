//! The `evaluate`, `verify` and `optimize` commands and their reports.
//!
//! Each command turns a [`RunConfig`] into a report struct; `write` emits a
//! CSV table and a JSON summary. Reports contain no timestamps or timings,
//! so equal inputs give byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ModelSpec, Objective, PolicySpec, RunConfig, VerifySpec, SCHEMA_VERSION};
use crate::error::{DamError, Result};
use crate::exit;
use crate::mc::{self, PathConfig, SimulationEstimate};
use crate::policy::{self, DamProblem, FillMode, PolicyParams};
use crate::scale::ScaleFunctionSet;

/// Fraction of unfinished samples above which an undiscounted check is
/// reported as starved rather than compared.
pub const STARVATION_FRACTION: f64 = 0.01;

/// Simulated time per path for phase and cycle checks when the config sets none.
pub const DEFAULT_VERIFY_HORIZON: f64 = 1e3;

/// Discounted totals are simulated until `e^{−αt}` drops below this.
const TOTAL_DISCOUNT_TOL: f64 = 1e-6;

/// Discounted checks tolerate unfinished samples once `e^{−αH}` is below this.
const TAIL_TOL: f64 = 1e-6;

/// One analytic quantity. `value` is absent when the quantity is undefined
/// for the configuration (infinite mean, unsupported combination); `note`
/// says why.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantity {
    pub quantity: String,
    pub alpha: f64,
    pub value: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluateReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub model: ModelSpec,
    pub policy: PolicySpec,
    pub start: f64,
    pub quantities: Vec<Quantity>,
}

impl EvaluateReport {
    pub fn get(&self, quantity: &str, alpha: f64) -> Option<f64> {
        self.quantities
            .iter()
            .find(|q| q.quantity == quantity && q.alpha == alpha)
            .and_then(|q| q.value)
    }

    /// Writes `evaluate.csv` and `evaluate.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut rows = vec![vec!["quantity".into(), "alpha".into(), "value".into(), "note".into()]];
        for q in &self.quantities {
            rows.push(vec![
                q.quantity.clone(),
                fmt(q.alpha),
                q.value.map(fmt).unwrap_or_default(),
                q.note.clone().unwrap_or_default(),
            ]);
        }
        write_pair(dir, "evaluate", &rows, self)
    }
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn write_pair<T: Serialize>(dir: &Path, stem: &str, rows: &[Vec<String>], summary: &T) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let mut w = csv::Writer::from_path(&csv_path).map_err(csv_error)?;
    for r in rows {
        w.write_record(r).map_err(csv_error)?;
    }
    w.flush()?;
    let json_path = dir.join(format!("{stem}.json"));
    let mut text = serde_json::to_string_pretty(summary).map_err(|e| DamError::Io(e.into()))?;
    text.push('\n');
    fs::write(&json_path, text)?;
    Ok(vec![csv_path, json_path])
}

fn csv_error(e: csv::Error) -> DamError {
    DamError::Io(std::io::Error::other(e))
}

/// Errors that mean "this quantity does not exist here" rather than a
/// failed computation.
fn not_available(e: &DamError) -> bool {
    matches!(
        e,
        DamError::Unsupported(_) | DamError::InfiniteMean(_) | DamError::Divergence(_) | DamError::Domain(_)
    )
}

struct Collector(Vec<Quantity>);

impl Collector {
    fn push(&mut self, quantity: &str, alpha: f64, r: Result<f64>) -> Result<()> {
        let (value, note) = match r {
            Ok(v) if v.is_finite() => (Some(v), None),
            Ok(v) => (None, Some(format!("value is {v}"))),
            Err(e) if not_available(&e) => (None, Some(e.to_string())),
            Err(e) => return Err(e),
        };
        self.0.push(Quantity {
            quantity: quantity.into(),
            alpha,
            value,
            note,
        });
        Ok(())
    }
}

fn fill_exit_lt(s: &ScaleFunctionSet, mode: FillMode, x: f64, lambda: f64) -> Result<f64> {
    match mode {
        FillMode::Plain => exit::exit_lt_up(s, x, lambda),
        FillMode::Reflected => exit::exit_lt_reflected(s, x, lambda),
    }
}

fn fill_exit_mean(s: &ScaleFunctionSet, mode: FillMode, x: f64, lambda: f64) -> Result<f64> {
    match mode {
        FillMode::Plain => exit::exit_mean_up(s, x, lambda),
        FillMode::Reflected => exit::exit_mean_reflected(s, x, lambda),
    }
}

fn alpha_list(cfg: &RunConfig) -> Vec<f64> {
    let mut a = vec![0.0];
    a.extend(cfg.alphas.iter().copied().filter(|&a| a > 0.0));
    a
}

/// Every analytic quantity of the configured policy from the configured start.
pub fn cmd_evaluate(cfg: &RunConfig) -> Result<EvaluateReport> {
    let problem = cfg.problem()?;
    let PolicyParams { lambda, tau, v, .. } = problem.policy;
    let x = cfg.start();
    let (mode, c) = (problem.mode, &problem.costs);
    let mut out = Collector(Vec::new());
    for alpha in alpha_list(cfg) {
        let (s, s_m) = problem.scales(alpha)?;
        out.push("eta", alpha, Ok(s.eta()))?;
        out.push("eta_release", alpha, Ok(s_m.eta()))?;
        out.push("fill_exit_lt", alpha, fill_exit_lt(&s, mode, x, lambda))?;
        out.push("fill_cost", alpha, policy::fill_cost(&s, x, lambda, &c.g, mode))?;
        out.push("release_exit_lt", alpha, exit::release_exit_lt(&s_m, lambda, tau, v))?;
        out.push("release_cost", alpha, policy::release_cost(&s_m, lambda, tau, v, &c.g_star))?;
        out.push("cycle_end_lt", alpha, exit::cycle_end_lt(&s, &s_m, &problem.policy, mode, x))?;
        if alpha == 0.0 {
            out.push("fill_exit_mean", alpha, fill_exit_mean(&s, mode, x, lambda))?;
            out.push("release_exit_mean", alpha, exit::release_exit_mean(&s_m, lambda, tau, v))?;
            let law = problem.overshoot(&s, x);
            out.push("overshoot_creep_mass", alpha, law.as_ref().map(|l| l.atom_at_lambda()).map_err(Clone::clone))?;
            out.push(
                "overshoot_mean",
                alpha,
                law.map(|l| l.expect(|z| z - lambda) / l.total_mass()),
            )?;
            let rr = problem.renewal_reward();
            out.push("mean_cycle_cost", alpha, rr.as_ref().map(|r| r.0).map_err(Clone::clone))?;
            out.push("mean_cycle_length", alpha, rr.as_ref().map(|r| r.1).map_err(Clone::clone))?;
            out.push("long_run_average_cost", alpha, rr.map(|(n, d)| n / d))?;
        } else {
            let first = problem.cycle_summary(&s, &s_m, x);
            out.push("cycle_cost", alpha, first.map(|f| f.cost))?;
            out.push("total_discounted_cost", alpha, problem.total_discounted_cost(alpha, x))?;
            out.push("scaled_discounted_cost", alpha, problem.scaled_discounted_cost(alpha))?;
        }
    }
    Ok(EvaluateReport {
        schema_version: SCHEMA_VERSION,
        command: "evaluate",
        model: cfg.model.clone(),
        policy: cfg.policy.clone(),
        start: x,
        quantities: out.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Too many simulated phases hit the horizon to compare.
    Starved,
}

/// One analytic value against its Monte Carlo estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub quantity: String,
    pub alpha: f64,
    pub analytic: f64,
    pub mc_mean: Option<f64>,
    pub std_error: Option<f64>,
    pub z_score: Option<f64>,
    pub samples: usize,
    /// Samples cut off by the horizon.
    pub incomplete: usize,
    pub status: CheckStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub seed: u64,
    pub n_paths: usize,
    pub total_paths: usize,
    pub time_step: f64,
    pub tolerance_se: f64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status != CheckStatus::Pass)
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
        let mut rows = vec![[
            "quantity",
            "alpha",
            "analytic",
            "mc_mean",
            "std_error",
            "z_score",
            "samples",
            "incomplete",
            "status",
        ]
        .map(String::from)
        .to_vec()];
        for c in &self.checks {
            rows.push(vec![
                c.quantity.clone(),
                fmt(c.alpha),
                fmt(c.analytic),
                opt(c.mc_mean),
                opt(c.std_error),
                opt(c.z_score),
                c.samples.to_string(),
                c.incomplete.to_string(),
                format!("{:?}", c.status).to_lowercase(),
            ]);
        }
        write_pair(dir, "verify", &rows, self)
    }
}

struct Verifier<'a> {
    tolerance: f64,
    hook: &'a dyn Fn(&str, f64, f64) -> f64,
    checks: Vec<Check>,
}

impl Verifier<'_> {
    fn compare(&mut self, quantity: &str, alpha: f64, analytic: Result<f64>, sample: Sample) -> Result<()> {
        let analytic = match analytic {
            Ok(v) if v.is_finite() => (self.hook)(quantity, alpha, v),
            Ok(_) => return Ok(()),
            Err(e) if not_available(&e) => return Ok(()),
            Err(e) => return Err(e),
        };
        let est = if sample.starved() { None } else { sample.estimate.ok() };
        let status = match &est {
            None => CheckStatus::Starved,
            Some(e) if e.agrees(analytic, self.tolerance) => CheckStatus::Pass,
            Some(_) => CheckStatus::Fail,
        };
        self.checks.push(Check {
            quantity: quantity.into(),
            alpha,
            analytic,
            mc_mean: est.as_ref().map(|e| e.mean),
            std_error: est.as_ref().map(|e| e.std_error),
            z_score: est.as_ref().map(|e| e.z_score(analytic)),
            samples: sample.total,
            incomplete: sample.incomplete,
            status,
        });
        Ok(())
    }
}

/// Simulated values of one quantity.
struct Sample {
    estimate: Result<SimulationEstimate>,
    total: usize,
    incomplete: usize,
    /// Weight left beyond the horizon: `e^{−αH}`, or 1 when undiscounted.
    tail: f64,
}

impl Sample {
    /// Too many samples hit a horizon that discounting does not hide.
    fn starved(&self) -> bool {
        self.tail > TAIL_TOL && self.incomplete as f64 > STARVATION_FRACTION * self.total as f64
    }

    /// Discounted values; unfinished samples keep their partial value.
    fn discounted(name: &str, values: &[(f64, bool)], alpha: f64, horizon: f64) -> Self {
        let all: Vec<f64> = values.iter().map(|v| v.0).collect();
        Self {
            estimate: mc::estimate(name, &all),
            total: values.len(),
            incomplete: values.iter().filter(|v| !v.1).count(),
            tail: (-alpha * horizon).exp(),
        }
    }

    /// Undiscounted values; only finished samples are averaged.
    fn undiscounted(name: &str, values: &[(f64, bool)]) -> Self {
        let done: Vec<f64> = values.iter().filter(|v| v.1).map(|v| v.0).collect();
        Self {
            estimate: mc::estimate(name, &done),
            total: values.len(),
            incomplete: values.len() - done.len(),
            tail: 1.0,
        }
    }
}

/// Decorrelates the seeds of the separate simulation runs.
fn run_seed(seed: u64, run: u64) -> u64 {
    seed ^ (run + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Runs the Monte Carlo oracle against every analytic quantity it can
/// reach and flags `|analytic − MC| > k·SE`.
pub fn cmd_verify(cfg: &RunConfig) -> Result<VerifyReport> {
    cmd_verify_with(cfg, &|_, _, v| v)
}

/// [`cmd_verify`] with `hook(quantity, alpha, analytic)` substituted for
/// each analytic value; used to check that the harness can fail.
pub fn cmd_verify_with(cfg: &RunConfig, hook: &dyn Fn(&str, f64, f64) -> f64) -> Result<VerifyReport> {
    let spec: VerifySpec = cfg
        .verify
        .clone()
        .ok_or_else(|| DamError::Config("verify: section missing from the config".into()))?;
    let problem = cfg.problem()?;
    let PolicyParams { lambda, tau, m, v } = problem.policy;
    let (mode, c, model) = (problem.mode, &problem.costs, &problem.model);
    let x = cfg.start();
    let total_paths = spec.total_paths.unwrap_or(spec.n_paths / 5).max(2);
    let horizon = spec.horizon.unwrap_or(DEFAULT_VERIFY_HORIZON);
    let base = PathConfig {
        time_step: spec.time_step,
        n_paths: spec.n_paths,
        seed: spec.seed,
        horizon,
        max_cycles: 1,
    };
    let mut run = 0u64;
    let mut next = || {
        run += 1;
        PathConfig {
            seed: run_seed(spec.seed, run),
            ..base
        }
    };
    let mut ver = Verifier {
        tolerance: spec.tolerance_se,
        hook,
        checks: Vec::new(),
    };
    let lt = |alpha: f64, t: f64, done: bool| (if done { (-alpha * t).exp() } else { 0.0 }, done);

    for (i, &alpha) in cfg.alphas.iter().enumerate() {
        let (s, s_m) = problem.scales(alpha)?;
        let disc = |name: &str, values: &[(f64, bool)]| Sample::discounted(name, values, alpha, horizon);
        if x < lambda {
            let ph = mc::sample_fill_phase(model, mode, x, lambda, &c.g, alpha, &next())?;
            let lts: Vec<_> = ph.iter().map(|p| lt(alpha, p.time, p.completed)).collect();
            ver.compare("fill_exit_lt", alpha, fill_exit_lt(&s, mode, x, lambda), disc("fill_exit_lt", &lts))?;
            let cost: Vec<_> = ph.iter().map(|p| (p.discounted_cost, p.completed)).collect();
            let analytic = policy::fill_cost(&s, x, lambda, &c.g, mode);
            ver.compare("fill_cost", alpha, analytic, disc("fill_cost", &cost))?;
            if i == 0 {
                let t: Vec<_> = ph.iter().map(|p| (p.time, p.completed)).collect();
                let analytic = with_scale(&problem, |s, _| fill_exit_mean(s, mode, x, lambda));
                ver.compare("fill_exit_mean", 0.0, analytic, Sample::undiscounted("fill_exit_mean", &t))?;
            }
        }

        let ph = mc::sample_release_phase(model, m, lambda, tau, v, &c.g_star, alpha, &next())?;
        let lts: Vec<_> = ph.iter().map(|p| lt(alpha, p.time, p.completed)).collect();
        let analytic = exit::release_exit_lt(&s_m, lambda, tau, v);
        ver.compare("release_exit_lt", alpha, analytic, disc("release_exit_lt", &lts))?;
        if i == 0 {
            let t: Vec<_> = ph.iter().map(|p| (p.time, p.completed)).collect();
            let analytic = with_scale(&problem, |_, s_m| exit::release_exit_mean(s_m, lambda, tau, v));
            ver.compare("release_exit_mean", 0.0, analytic, Sample::undiscounted("release_exit_mean", &t))?;
        }
        if v.is_infinite() {
            continue;
        }
        let cost: Vec<_> = ph.iter().map(|p| (p.discounted_cost, p.completed)).collect();
        let analytic = policy::release_cost(&s_m, lambda, tau, v, &c.g_star);
        ver.compare("release_cost", alpha, analytic, disc("release_cost", &cost))?;

        let paths = mc::run_policy_cycles(&problem, alpha, x, &next())?;
        let first: Vec<_> = paths.iter().map(|p| p.cycles[0]).collect();
        let lts: Vec<_> = first.iter().map(|r| lt(alpha, r.length(), r.complete)).collect();
        let analytic = exit::cycle_end_lt(&s, &s_m, &problem.policy, mode, x);
        ver.compare("cycle_end_lt", alpha, analytic, disc("cycle_end_lt", &lts))?;
        let cost: Vec<_> = first.iter().map(|r| (r.discounted_cost, r.complete)).collect();
        let analytic = problem.cycle_summary(&s, &s_m, x).map(|s| s.cost);
        ver.compare("cycle_cost", alpha, analytic, disc("cycle_cost", &cost))?;

        // long enough that the untouched remainder is below TOTAL_DISCOUNT_TOL
        let long = PathConfig {
            n_paths: total_paths,
            horizon: (1.0 / TOTAL_DISCOUNT_TOL).ln() / alpha,
            max_cycles: usize::MAX,
            ..next()
        };
        let paths = mc::run_policy_cycles(&problem, alpha, x, &long)?;
        let totals: Vec<_> = paths.iter().map(|p| (p.discounted_total, true)).collect();
        let analytic = problem.total_discounted_cost(alpha, x);
        ver.compare("total_discounted_cost", alpha, analytic, disc("total_discounted_cost", &totals))?;
    }

    if v.is_finite() {
        let paths = mc::run_policy_cycles(&problem, 0.0, tau, &next())?;
        let cycles: Vec<_> = paths.iter().map(|p| p.cycles[0]).collect();
        let lengths: Vec<_> = cycles.iter().map(|r| (r.length(), r.complete)).collect();
        let rr = problem.renewal_reward();
        let analytic = rr.as_ref().map(|r| r.1).map_err(Clone::clone);
        ver.compare("mean_cycle_length", 0.0, analytic, Sample::undiscounted("mean_cycle_length", &lengths))?;
        let done: Vec<_> = cycles.iter().filter(|r| r.complete).collect();
        let rewards: Vec<f64> = done.iter().map(|r| r.undiscounted_cost).collect();
        let lens: Vec<f64> = done.iter().map(|r| r.length()).collect();
        let sample = Sample {
            estimate: mc::estimate_ratio("long_run_average_cost", &rewards, &lens),
            total: cycles.len(),
            incomplete: cycles.len() - done.len(),
            tail: 1.0,
        };
        ver.compare("long_run_average_cost", 0.0, rr.map(|(n, d)| n / d), sample)?;
    }

    let passed = ver.checks.iter().all(|c| c.status == CheckStatus::Pass);
    Ok(VerifyReport {
        schema_version: SCHEMA_VERSION,
        command: "verify",
        seed: spec.seed,
        n_paths: spec.n_paths,
        total_paths,
        time_step: spec.time_step,
        tolerance_se: spec.tolerance_se,
        checks: ver.checks,
        passed,
    })
}

fn with_scale<F: FnOnce(&ScaleFunctionSet, &ScaleFunctionSet) -> Result<f64>>(p: &DamProblem, f: F) -> Result<f64> {
    let (s, s_m) = p.scales(0.0)?;
    f(&s, &s_m)
}

/// One evaluated policy of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub lambda: f64,
    pub tau: f64,
    pub objective: Option<f64>,
    pub long_run_average: Option<f64>,
    pub mean_cycle_length: Option<f64>,
    pub mean_cycle_cost: Option<f64>,
    /// Total discounted cost from the start, one entry per configured `α`.
    pub discounted: Vec<Option<f64>>,
    /// 0 for the initial grid, `r` for points added in refinement round `r`.
    pub round: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub schema_version: u32,
    pub command: &'static str,
    pub objective: Objective,
    pub objective_alpha: Option<f64>,
    pub alphas: Vec<f64>,
    /// All evaluated points, ordered by `(λ, τ)`.
    pub points: Vec<SweepPoint>,
    pub argmin: SweepPoint,
}

impl SweepResult {
    /// Writes `sweep.csv` (the full table) and `optimize.json`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
        let mut header: Vec<String> = [
            "lambda",
            "tau",
            "round",
            "objective",
            "long_run_average",
            "mean_cycle_length",
            "mean_cycle_cost",
        ]
        .map(String::from)
        .to_vec();
        header.extend(self.alphas.iter().map(|a| format!("discounted_alpha_{a}")));
        let mut rows = vec![header];
        for p in &self.points {
            let mut r = vec![
                fmt(p.lambda),
                fmt(p.tau),
                p.round.to_string(),
                opt(p.objective),
                opt(p.long_run_average),
                opt(p.mean_cycle_length),
                opt(p.mean_cycle_cost),
            ];
            r.extend(p.discounted.iter().map(|&d| opt(d)));
            rows.push(r);
        }
        let paths = write_pair(dir, "sweep", &rows, self)?;
        // the summary goes under its own name; drop the duplicate
        let json = dir.join("optimize.json");
        fs::rename(&paths[1], &json)?;
        Ok(vec![paths[0].clone(), json])
    }
}

fn keep(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        Ok(_) => Ok(None),
        Err(e) if not_available(&e) => Ok(None),
        Err(e) => Err(e),
    }
}

fn evaluate_point(cfg: &RunConfig, base: &DamProblem, lambda: f64, tau: f64, round: usize) -> Result<SweepPoint> {
    let p = base.with_policy(PolicyParams {
        lambda,
        tau,
        ..base.policy
    })?;
    let x = cfg.policy.start.unwrap_or(tau);
    let rr = keep_pair(p.renewal_reward())?;
    let mut discounted = Vec::with_capacity(cfg.alphas.len());
    for &a in &cfg.alphas {
        discounted.push(keep(p.total_discounted_cost(a, x))?);
    }
    let opt = cfg.optimize.as_ref().expect("checked by cmd_optimize");
    let objective = match opt.objective {
        Objective::LongRunAverage => rr.map(|(n, d)| n / d),
        Objective::Discounted => {
            let a = opt.alpha.expect("validated");
            match cfg.alphas.iter().position(|&b| b == a) {
                Some(i) => discounted[i],
                None => keep(p.total_discounted_cost(a, x))?,
            }
        }
    };
    Ok(SweepPoint {
        lambda,
        tau,
        objective,
        long_run_average: rr.map(|(n, d)| n / d),
        mean_cycle_length: rr.map(|r| r.1),
        mean_cycle_cost: rr.map(|r| r.0),
        discounted,
        round,
    })
}

fn keep_pair(r: Result<(f64, f64)>) -> Result<Option<(f64, f64)>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e) if not_available(&e) => Ok(None),
        Err(e) => Err(e),
    }
}

fn feasible(cfg: &RunConfig, lambda: f64, tau: f64) -> bool {
    let p = &cfg.policy;
    PolicyParams::new(lambda, tau, p.release_rate, p.capacity).is_ok()
}

/// Ordering used for the argmin: objective, then `λ`, then `τ`.
fn better(a: &SweepPoint, b: &SweepPoint) -> bool {
    let (Some(oa), Some(ob)) = (a.objective, b.objective) else {
        return a.objective.is_some();
    };
    oa.total_cmp(&ob)
        .then(a.lambda.total_cmp(&b.lambda))
        .then(a.tau.total_cmp(&b.tau))
        .is_lt()
}

/// Grid search over `(λ, τ)` followed by refinement rounds on a grid of
/// half the previous spacing around the incumbent.
pub fn cmd_optimize(cfg: &RunConfig) -> Result<SweepResult> {
    let opt = cfg
        .optimize
        .clone()
        .ok_or_else(|| DamError::Config("optimize: section missing from the config".into()))?;
    let base = cfg.problem()?;
    let grid: Vec<(f64, f64)> = opt
        .lambda
        .values()
        .into_iter()
        .flat_map(|l| opt.tau.values().into_iter().map(move |t| (l, t)))
        .filter(|&(l, t)| feasible(cfg, l, t))
        .collect();
    if grid.is_empty() {
        return Err(DamError::Config(
            "optimize: no grid point satisfies 0 <= tau < lambda <= capacity".into(),
        ));
    }
    let eval = |pts: &[(f64, f64)], round: usize| -> Result<Vec<SweepPoint>> {
        pts.par_iter().map(|&(l, t)| evaluate_point(cfg, &base, l, t, round)).collect()
    };
    let mut points = eval(&grid, 0)?;
    let (mut hl, mut ht) = (opt.lambda.spacing(), opt.tau.spacing());
    for round in 1..=opt.refine_rounds {
        let Some(best) = argmin(&points) else { break };
        hl /= 2.0;
        ht /= 2.0;
        if hl == 0.0 && ht == 0.0 {
            break;
        }
        let mut fresh: Vec<(f64, f64)> = Vec::new();
        for i in -1..=1 {
            for j in -1..=1 {
                let l = (best.lambda + i as f64 * hl).clamp(opt.lambda.min, opt.lambda.max);
                let t = (best.tau + j as f64 * ht).clamp(opt.tau.min, opt.tau.max);
                let seen = points.iter().any(|p| p.lambda == l && p.tau == t) || fresh.contains(&(l, t));
                if !seen && feasible(cfg, l, t) {
                    fresh.push((l, t));
                }
            }
        }
        let pts = fresh;
        points.extend(eval(&pts, round)?);
    }
    points.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.tau.total_cmp(&b.tau)));
    let argmin = argmin(&points)
        .ok_or_else(|| DamError::Numerical("the objective is undefined at every feasible grid point".into()))?;
    Ok(SweepResult {
        schema_version: SCHEMA_VERSION,
        command: "optimize",
        objective: opt.objective,
        objective_alpha: opt.alpha,
        alphas: cfg.alphas.clone(),
        argmin,
        points,
    })
}

fn argmin(points: &[SweepPoint]) -> Option<SweepPoint> {
    let best = points.iter().fold(None::<&SweepPoint>, |acc, p| match acc {
        Some(b) if !better(p, b) => Some(b),
        _ => Some(p),
    })?;
    best.objective.map(|_| best.clone())
}
