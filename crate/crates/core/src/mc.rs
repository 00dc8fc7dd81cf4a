//! Monte Carlo simulation of the content process under a `P^M_{λ,τ}`
//! policy, used as an independent oracle for the analytic results.
//!
//! * Brownian input runs on a time grid. Level crossings between grid points
//!   are caught with the Brownian bridge crossing probability, and
//!   reflections use the exact bridge extremes of each step.
//! * Compound Poisson input is simulated event by event, so passage times,
//!   overshoots and reflections are exact. Running costs along the linear
//!   stretches between jumps are integrated by Gauss–Legendre.
//! * Gamma and inverse Gaussian input use exact increments on the grid.
//!   Crossings and reflections are only resolved at grid points.
//!
//! Path `i` draws from the ChaCha stream `i` of the configured seed, so the
//! results do not depend on how paths are scheduled across threads.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, InverseGaussian, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{DamError, Result};
use crate::levy::{JumpDistribution, LevyMeasure, LevyModel};
use crate::policy::{DamProblem, FillMode, PiecewisePolynomial};

/// Simulation budget and discretisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathConfig {
    /// Grid step for Brownian, gamma and inverse Gaussian input.
    pub time_step: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Simulated time per path; phases still running at the horizon are
    /// reported as incomplete.
    pub horizon: f64,
    /// Upper bound on cycles simulated per path.
    pub max_cycles: usize,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self {
            time_step: 1e-3,
            n_paths: 10_000,
            seed: 0,
            horizon: 1e3,
            max_cycles: 1,
        }
    }
}

impl PathConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.time_step > 0.0 && self.time_step.is_finite()) {
            return Err(DamError::Domain(format!("time_step must be positive, got {}", self.time_step)));
        }
        if self.n_paths == 0 || self.max_cycles == 0 {
            return Err(DamError::Domain("n_paths and max_cycles must be at least 1".into()));
        }
        if !(self.horizon > 0.0) {
            return Err(DamError::Domain(format!("horizon must be positive, got {}", self.horizon)));
        }
        Ok(())
    }
}

/// Horizon after which discounting leaves less than `tol` of a cost stream
/// bounded by `rate_bound` per unit time.
pub fn discount_horizon(alpha: f64, rate_bound: f64, tol: f64) -> f64 {
    ((rate_bound.max(1e-300) / (alpha * tol)).ln() / alpha).max(1.0 / alpha)
}

fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// Runs `f` on every path index, in parallel, returning results in path order.
fn per_path<T: Send, F: Fn(u64, &mut ChaCha8Rng) -> T + Sync>(config: &PathConfig, f: F) -> Vec<T> {
    (0..config.n_paths as u64)
        .into_par_iter()
        .map(|i| f(i, &mut path_rng(config.seed, i)))
        .collect()
}

#[derive(Debug, Clone)]
enum Sampler {
    Brownian { drift: f64, sigma: f64 },
    CompoundPoisson { drain: f64, rate: f64, jumps: JumpDistribution },
    Gamma { drain: f64, a: f64, b: f64 },
    InverseGaussian { drain: f64, sigma: f64, c: f64 },
}

impl Sampler {
    fn new(model: &LevyModel) -> Result<Self> {
        let drain = model.linear_coefficient();
        Ok(match model.measure() {
            LevyMeasure::None => Sampler::Brownian {
                drift: -drain,
                sigma: model.sigma2().sqrt(),
            },
            LevyMeasure::CompoundPoisson { rate, jumps } => Sampler::CompoundPoisson {
                drain,
                rate: *rate,
                jumps: jumps.clone(),
            },
            LevyMeasure::Gamma { a, b } => Sampler::Gamma { drain, a: *a, b: *b },
            LevyMeasure::InverseGaussian { sigma, c } => Sampler::InverseGaussian {
                drain,
                sigma: *sigma,
                c: *c,
            },
            LevyMeasure::Generic(_) => {
                return Err(DamError::Unsupported("generic Lévy measures cannot be simulated".into()))
            }
        })
    }

    /// Increment of the subordinator part plus drift over `h`.
    fn grid_increment(&self, h: f64, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Sampler::Brownian { drift, sigma } => {
                let n: f64 = StandardNormal.sample(rng);
                drift * h + sigma * h.sqrt() * n
            }
            Sampler::Gamma { drain, a, b } => {
                let s = Gamma::new(a * h, 1.0 / b).expect("positive shape").sample(rng);
                s - drain * h
            }
            Sampler::InverseGaussian { drain, sigma, c } => {
                let s = InverseGaussian::new(h / c, h * h / (sigma * sigma))
                    .expect("positive parameters")
                    .sample(rng);
                s - drain * h
            }
            Sampler::CompoundPoisson { drain, rate, jumps } => {
                let mut t = 0.0;
                let mut total = -drain * h;
                loop {
                    let e: f64 = Exp1.sample(rng);
                    t += e / rate;
                    if t > h {
                        return total;
                    }
                    total += sample_jump(jumps, rng);
                }
            }
        }
    }
}

fn sample_jump(jumps: &JumpDistribution, rng: &mut ChaCha8Rng) -> f64 {
    let e: f64 = Exp1.sample(rng);
    match jumps {
        JumpDistribution::Exponential { rate } => e / rate,
        JumpDistribution::HyperExponential { weights, rates } => {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (w, r) in weights.iter().zip(rates) {
                acc += w;
                if u < acc {
                    return e / r;
                }
            }
            e / rates[rates.len() - 1]
        }
    }
}

/// Sampled trajectory of the free input `I` started at zero.
#[derive(Debug, Clone, Default, Serialize)]
pub struct InputPath {
    /// Grid (or event) times, starting at zero.
    pub times: Vec<f64>,
    /// `I` at those times.
    pub values: Vec<f64>,
    /// Jump epochs and sizes (compound Poisson only).
    pub jumps: Vec<(f64, f64)>,
}

/// One trajectory of `I` on `[0, t_end]`, drawn from stream `path`.
pub fn simulate_input_path(model: &LevyModel, config: &PathConfig, t_end: f64, path: u64) -> Result<InputPath> {
    config.validate()?;
    if !(t_end > 0.0 && t_end <= config.horizon) {
        return Err(DamError::Domain(format!(
            "t_end must lie in (0, horizon = {}], got {t_end}",
            config.horizon
        )));
    }
    let sampler = Sampler::new(model)?;
    let mut rng = path_rng(config.seed, path);
    let mut out = InputPath {
        times: vec![0.0],
        values: vec![0.0],
        jumps: Vec::new(),
    };
    if let Sampler::CompoundPoisson { drain, rate, jumps } = &sampler {
        let (mut t, mut x) = (0.0, 0.0);
        loop {
            let e: f64 = Exp1.sample(&mut rng);
            let next = t + e / rate;
            if next > t_end {
                out.times.push(t_end);
                out.values.push(x - drain * (t_end - t));
                return Ok(out);
            }
            let j = sample_jump(jumps, &mut rng);
            x += -drain * (next - t) + j;
            t = next;
            out.jumps.push((t, j));
            out.times.push(t);
            out.values.push(x);
        }
    }
    let (mut t, mut x) = (0.0, 0.0);
    while t < t_end {
        let h = config.time_step.min(t_end - t);
        x += sampler.grid_increment(h, &mut rng);
        t = if t_end - t <= config.time_step { t_end } else { t + h };
        out.times.push(t);
        out.values.push(x);
    }
    Ok(out)
}

/// Outcome of one simulated phase (fill or release).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseOutcome {
    /// Duration of the phase (time spent until the horizon if incomplete).
    pub time: f64,
    /// Content at the end of the phase: the post-jump level at the passage
    /// above `λ`, or `τ` at the end of a release.
    pub position: f64,
    /// `∫ e^{−αt} rate(Z_t) dt` over the phase.
    pub discounted_cost: f64,
    /// `∫ rate(Z_t) dt` over the phase.
    pub undiscounted_cost: f64,
    pub completed: bool,
}

struct CostAccumulator<'a> {
    rate: &'a PiecewisePolynomial,
    alpha: f64,
    active: bool,
    discounted: f64,
    undiscounted: f64,
}

const GL8: [(f64, f64); 4] = [
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

impl<'a> CostAccumulator<'a> {
    fn new(rate: &'a PiecewisePolynomial, alpha: f64) -> Self {
        Self {
            rate,
            alpha,
            active: !rate.is_zero(),
            discounted: 0.0,
            undiscounted: 0.0,
        }
    }

    /// Trapezoid over one grid step `[t0, t1]`.
    fn step(&mut self, t0: f64, t1: f64, y0: f64, y1: f64) {
        if !self.active || t1 <= t0 {
            return;
        }
        let v = 0.5 * (t1 - t0) * (self.rate.eval(y0) + self.rate.eval(y1));
        self.undiscounted += v;
        self.discounted += v * (-self.alpha * 0.5 * (t0 + t1)).exp();
    }

    /// Exact-to-rounding integral along `y(s) = y0 + slope·s`, `s ∈ [0, len]`,
    /// starting at absolute time `t0`.
    fn linear(&mut self, t0: f64, y0: f64, slope: f64, len: f64) {
        if !self.active || len <= 0.0 {
            return;
        }
        let mut cuts = vec![0.0];
        if slope != 0.0 {
            for &b in self.rate.breaks() {
                let s = (b - y0) / slope;
                if s > 0.0 && s < len {
                    cuts.push(s);
                }
            }
        }
        cuts.push(len);
        cuts.sort_by(f64::total_cmp);
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for &(node, weight) in &GL8 {
                for s in [mid - half * node, mid + half * node] {
                    let v = weight * half * self.rate.eval(y0 + slope * s);
                    self.undiscounted += v;
                    self.discounted += v * (-self.alpha * (t0 + s)).exp();
                }
            }
        }
    }

    /// Constant level `y` on `[t0, t0 + len]`.
    fn constant(&mut self, t0: f64, y: f64, len: f64) {
        if !self.active || len <= 0.0 {
            return;
        }
        let g = self.rate.eval(y);
        self.undiscounted += g * len;
        self.discounted += g * if self.alpha == 0.0 {
            len
        } else {
            (-self.alpha * t0).exp() * -(-self.alpha * len).exp_m1() / self.alpha
        };
    }

    fn finish(self, time: f64, position: f64, completed: bool) -> PhaseOutcome {
        PhaseOutcome {
            time,
            position,
            discounted_cost: self.discounted,
            undiscounted_cost: self.undiscounted,
            completed,
        }
    }
}

/// Fill phase from `x` until the content first reaches `λ`.
#[allow(clippy::too_many_arguments)]
fn fill_phase(
    sampler: &Sampler,
    mode: FillMode,
    x: f64,
    lambda: f64,
    g: &PiecewisePolynomial,
    alpha: f64,
    dt: f64,
    t_max: f64,
    rng: &mut ChaCha8Rng,
) -> PhaseOutcome {
    let reflect = mode == FillMode::Reflected;
    let mut acc = CostAccumulator::new(g, alpha);
    let (mut t, mut y) = (0.0, x);
    if y >= lambda {
        return acc.finish(0.0, y, true);
    }
    match sampler {
        Sampler::Brownian { drift, sigma } => {
            let s2 = sigma * sigma;
            while t < t_max {
                let h = dt.min(t_max - t);
                let sd = sigma * h.sqrt();
                let n: f64 = StandardNormal.sample(rng);
                let dx = drift * h + sd * n;
                let mut next = y + dx;
                if reflect && y + dx.min(0.0) < 8.0 * sd {
                    // exact Skorokhod map using the bridge minimum
                    let u: f64 = rng.random();
                    let m = 0.5 * (dx - (dx * dx - 2.0 * s2 * h * (1.0 - u).ln()).sqrt());
                    next = dx + y.max(-m);
                }
                if next >= lambda {
                    let tc = t + h * ((lambda - y) / (next - y)).clamp(0.0, 1.0);
                    acc.step(t, tc, y, lambda);
                    return acc.finish(tc, lambda, true);
                }
                let k = 2.0 * (lambda - y) * (lambda - next) / (s2 * h);
                if k < 40.0 {
                    let u: f64 = rng.random();
                    if u < (-k).exp() {
                        let tc = t + 0.5 * h;
                        acc.step(t, tc, y, lambda);
                        return acc.finish(tc, lambda, true);
                    }
                }
                acc.step(t, t + h, y, next);
                t += h;
                y = next;
            }
            acc.finish(t_max, y, false)
        }
        Sampler::CompoundPoisson { drain, rate, jumps } => loop {
            let e: f64 = Exp1.sample(rng);
            let gap = e / rate;
            let len = gap.min(t_max - t);
            // linear drain, held at zero when reflected
            let to_zero = if reflect { y / drain } else { f64::INFINITY };
            if len <= to_zero {
                acc.linear(t, y, -drain, len);
                y -= drain * len;
            } else {
                acc.linear(t, y, -drain, to_zero);
                acc.constant(t + to_zero, 0.0, len - to_zero);
                y = 0.0;
            }
            if gap > t_max - t {
                return acc.finish(t_max, y, false);
            }
            t += gap;
            y += sample_jump(jumps, rng);
            if y >= lambda {
                return acc.finish(t, y, true);
            }
        },
        Sampler::Gamma { .. } | Sampler::InverseGaussian { .. } => {
            while t < t_max {
                let h = dt.min(t_max - t);
                let mut next = y + sampler.grid_increment(h, rng);
                if reflect {
                    next = next.max(0.0);
                }
                if next >= lambda {
                    acc.step(t, t + h, y, y);
                    return acc.finish(t + h, next, true);
                }
                acc.step(t, t + h, y, next);
                t += h;
                y = next;
            }
            acc.finish(t_max, y, false)
        }
    }
}

/// Release phase of `I − M` (sampler of the shifted model) from `x`,
/// reflected at `V`, until the content falls to `τ`.
#[allow(clippy::too_many_arguments)]
fn release_phase(
    sampler: &Sampler,
    x: f64,
    tau: f64,
    v: f64,
    g_star: &PiecewisePolynomial,
    alpha: f64,
    dt: f64,
    t_max: f64,
    rng: &mut ChaCha8Rng,
) -> PhaseOutcome {
    let mut acc = CostAccumulator::new(g_star, alpha);
    let (mut t, mut y) = (0.0, x.min(v));
    if y <= tau {
        return acc.finish(0.0, tau, true);
    }
    match sampler {
        Sampler::Brownian { drift, sigma } => {
            let s2 = sigma * sigma;
            while t < t_max {
                let h = dt.min(t_max - t);
                let sd = sigma * h.sqrt();
                let n: f64 = StandardNormal.sample(rng);
                let dx = drift * h + sd * n;
                let mut next = y + dx;
                if v.is_finite() && y + dx.max(0.0) > v - 8.0 * sd {
                    // exact reflection below V using the bridge maximum
                    let u: f64 = rng.random();
                    let top = 0.5 * (dx + (dx * dx - 2.0 * s2 * h * (1.0 - u).ln()).sqrt());
                    next = y + dx - (y + top - v).max(0.0);
                }
                if next <= tau {
                    let tc = t + h * ((y - tau) / (y - next)).clamp(0.0, 1.0);
                    acc.step(t, tc, y, tau);
                    return acc.finish(tc, tau, true);
                }
                let k = 2.0 * (y - tau) * (next - tau) / (s2 * h);
                if k < 40.0 {
                    let u: f64 = rng.random();
                    if u < (-k).exp() {
                        let tc = t + 0.5 * h;
                        acc.step(t, tc, y, tau);
                        return acc.finish(tc, tau, true);
                    }
                }
                acc.step(t, t + h, y, next);
                t += h;
                y = next;
            }
            acc.finish(t_max, y, false)
        }
        Sampler::CompoundPoisson { drain, rate, jumps } => loop {
            let e: f64 = Exp1.sample(rng);
            let gap = e / rate;
            let to_tau = (y - tau) / drain;
            if to_tau <= gap && t + to_tau <= t_max {
                acc.linear(t, y, -drain, to_tau);
                return acc.finish(t + to_tau, tau, true);
            }
            if t + gap > t_max {
                let len = t_max - t;
                acc.linear(t, y, -drain, len);
                return acc.finish(t_max, y - drain * len, false);
            }
            acc.linear(t, y, -drain, gap);
            t += gap;
            y = (y - drain * gap + sample_jump(jumps, rng)).min(v);
        },
        Sampler::Gamma { .. } | Sampler::InverseGaussian { .. } => {
            while t < t_max {
                let h = dt.min(t_max - t);
                let next = (y + sampler.grid_increment(h, rng)).min(v);
                if next <= tau {
                    let tc = t + h * ((y - tau) / (y - next)).clamp(0.0, 1.0);
                    acc.step(t, tc, y, tau);
                    return acc.finish(tc, tau, true);
                }
                acc.step(t, t + h, y, next);
                t += h;
                y = next;
            }
            acc.finish(t_max, y, false)
        }
    }
}

/// Independent fill phases from `x` (passage above `λ`), one per path.
#[allow(clippy::too_many_arguments)]
pub fn sample_fill_phase(
    model: &LevyModel,
    mode: FillMode,
    x: f64,
    lambda: f64,
    g: &PiecewisePolynomial,
    alpha: f64,
    config: &PathConfig,
) -> Result<Vec<PhaseOutcome>> {
    config.validate()?;
    if mode == FillMode::Reflected && x < 0.0 {
        return Err(DamError::Domain(format!("reflected fill needs x >= 0, got {x}")));
    }
    let sampler = Sampler::new(model)?;
    Ok(per_path(config, |_, rng| {
        fill_phase(&sampler, mode, x, lambda, g, alpha, config.time_step, config.horizon, rng)
    }))
}

/// Independent release phases from `x`, one per path. `V` may be infinite.
#[allow(clippy::too_many_arguments)]
pub fn sample_release_phase(
    model: &LevyModel,
    release_rate: f64,
    x: f64,
    tau: f64,
    v: f64,
    g_star: &PiecewisePolynomial,
    alpha: f64,
    config: &PathConfig,
) -> Result<Vec<PhaseOutcome>> {
    config.validate()?;
    if !(tau <= x && x <= v) {
        return Err(DamError::Domain(format!("release start needs tau <= x <= V, got x={x}")));
    }
    let sampler = Sampler::new(&model.shifted(release_rate)?)?;
    Ok(per_path(config, |_, rng| {
        release_phase(&sampler, x, tau, v, g_star, alpha, config.time_step, config.horizon, rng)
    }))
}

/// One simulated cycle of the policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleRecord {
    pub path: u64,
    pub cycle: usize,
    pub start: f64,
    pub fill_time: f64,
    pub release_time: f64,
    /// Content right after the passage above `λ`, before truncation at `V`.
    pub overshoot: f64,
    /// Cost discounted to the start of the cycle.
    pub discounted_cost: f64,
    pub undiscounted_cost: f64,
    /// Volume released, `M × release_time`.
    pub output_volume: f64,
    pub complete: bool,
}

impl CycleRecord {
    pub fn length(&self) -> f64 {
        self.fill_time + self.release_time
    }
}

/// All cycles of one path and their discounted sum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSummary {
    pub cycles: Vec<CycleRecord>,
    /// `Σ e^{−α S_n} c_n` over the simulated cycles, partial ones included.
    pub discounted_total: f64,
    pub elapsed: f64,
    /// Whether the horizon cut a cycle short.
    pub truncated: bool,
}

/// Simulates policy cycles from `start`; later cycles start at `τ`. Each
/// path stops at the horizon or after `max_cycles` cycles.
pub fn run_policy_cycles(problem: &DamProblem, alpha: f64, start: f64, config: &PathConfig) -> Result<Vec<PathSummary>> {
    config.validate()?;
    let policy = problem.policy;
    if !(alpha >= 0.0) {
        return Err(DamError::Domain(format!("alpha must be >= 0, got {alpha}")));
    }
    if start > policy.v || (problem.mode == FillMode::Reflected && start < 0.0) {
        return Err(DamError::Domain(format!("start {start} outside the admissible range")));
    }
    let fill = Sampler::new(&problem.model)?;
    let release = Sampler::new(&problem.model.shifted(policy.m)?)?;
    let c = &problem.costs;
    let m = policy.m;
    Ok(per_path(config, |path, rng| {
        let mut cycles = Vec::new();
        let (mut elapsed, mut total, mut truncated) = (0.0, 0.0, false);
        let mut x = start;
        while cycles.len() < config.max_cycles && elapsed < config.horizon {
            let budget = config.horizon - elapsed;
            let k2 = if x <= policy.lambda { m * c.k2 } else { 0.0 };
            let f = fill_phase(&fill, problem.mode, x, policy.lambda, &c.g, alpha, config.time_step, budget, rng);
            let mut record = CycleRecord {
                path,
                cycle: cycles.len(),
                start: x,
                fill_time: f.time,
                release_time: 0.0,
                overshoot: f.position,
                discounted_cost: k2 + f.discounted_cost,
                undiscounted_cost: k2 + f.undiscounted_cost,
                output_volume: 0.0,
                complete: false,
            };
            if f.completed {
                let r = release_phase(
                    &release,
                    f.position,
                    policy.tau,
                    policy.v,
                    &c.g_star,
                    alpha,
                    config.time_step,
                    budget - f.time,
                    rng,
                );
                let d_rel = if alpha == 0.0 { r.time } else { -(-alpha * r.time).exp_m1() / alpha };
                let switch = (-alpha * f.time).exp();
                record.release_time = r.time;
                record.output_volume = m * r.time;
                record.discounted_cost += switch * (m * c.k1 + r.discounted_cost - c.r * m * d_rel);
                record.undiscounted_cost += m * c.k1 + r.undiscounted_cost - c.r * m * r.time;
                record.complete = r.completed;
            }
            total += (-alpha * elapsed).exp() * record.discounted_cost;
            elapsed += record.length();
            cycles.push(record);
            if !record.complete {
                truncated = true;
                break;
            }
            x = policy.tau;
        }
        PathSummary {
            cycles,
            discounted_total: total,
            elapsed,
            truncated,
        }
    }))
}

/// Writes one JSON record per cycle.
pub fn write_cycle_records<W: Write>(out: &mut W, paths: &[PathSummary]) -> Result<()> {
    for rec in paths.iter().flat_map(|p| &p.cycles) {
        serde_json::to_writer(&mut *out, rec).map_err(|e| DamError::Io(e.into()))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationEstimate {
    pub quantity: String,
    pub mean: f64,
    pub std_error: f64,
    pub n_effective: usize,
}

impl SimulationEstimate {
    /// `|value − mean|` in units of the standard error.
    pub fn z_score(&self, value: f64) -> f64 {
        let d = (value - self.mean).abs();
        if d == 0.0 {
            0.0
        } else if self.std_error == 0.0 {
            f64::INFINITY
        } else {
            d / self.std_error
        }
    }

    /// Whether `value` lies within `k` standard errors of the estimate.
    pub fn agrees(&self, value: f64, k: f64) -> bool {
        self.z_score(value) <= k
    }
}

/// Sample mean and standard error.
pub fn estimate(quantity: &str, values: &[f64]) -> Result<SimulationEstimate> {
    let n = values.len();
    if n < 2 {
        return Err(DamError::InsufficientData(format!("{quantity}: {n} samples, need at least 2")));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    Ok(SimulationEstimate {
        quantity: quantity.to_string(),
        mean,
        std_error: (var / n as f64).sqrt(),
        n_effective: n,
    })
}

/// Regenerative ratio estimator `Σ reward / Σ length` with delta-method
/// standard error.
pub fn estimate_ratio(quantity: &str, rewards: &[f64], lengths: &[f64]) -> Result<SimulationEstimate> {
    let n = rewards.len();
    if n != lengths.len() {
        return Err(DamError::InsufficientData(format!("{quantity}: mismatched sample sizes")));
    }
    if n < 2 {
        return Err(DamError::InsufficientData(format!("{quantity}: {n} cycles, need at least 2")));
    }
    let mean_len = lengths.iter().sum::<f64>() / n as f64;
    if !(mean_len > 0.0) {
        return Err(DamError::InsufficientData(format!("{quantity}: cycles have zero total length")));
    }
    let ratio = rewards.iter().sum::<f64>() / lengths.iter().sum::<f64>();
    let var = rewards
        .iter()
        .zip(lengths)
        .map(|(r, l)| (r - ratio * l).powi(2))
        .sum::<f64>()
        / (n - 1) as f64;
    Ok(SimulationEstimate {
        quantity: quantity.to_string(),
        mean: ratio,
        std_error: (var / n as f64).sqrt() / mean_len,
        n_effective: n,
    })
}

/// Complete cycles across all paths.
pub fn complete_cycles(paths: &[PathSummary]) -> Vec<CycleRecord> {
    paths.iter().flat_map(|p| p.cycles.iter().copied()).filter(|c| c.complete).collect()
}

/// Kolmogorov–Smirnov distance between the sample and a continuous cdf.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.627_6 / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{CostSpec, PolicyParams};

    fn small(n: usize, seed: u64) -> PathConfig {
        PathConfig {
            time_step: 1e-3,
            n_paths: n,
            seed,
            horizon: 200.0,
            max_cycles: 1,
        }
    }

    #[test]
    fn estimators_on_synthetic_data() {
        let e = estimate("c", &[3.0; 10]).unwrap();
        assert_eq!((e.mean, e.std_error), (3.0, 0.0));
        let r = estimate_ratio("r", &[2.0; 5], &[1.0; 5]).unwrap();
        assert_eq!((r.mean, r.std_error), (2.0, 0.0));
        assert!(matches!(estimate("x", &[1.0]), Err(DamError::InsufficientData(_))));
    }

    #[test]
    fn simulation_is_reproducible() {
        let m = LevyModel::brownian(1.0, 1.0).unwrap();
        let cfg = small(200, 7);
        let g = PiecewisePolynomial::zero();
        let a = sample_fill_phase(&m, FillMode::Plain, 0.0, 1.0, &g, 0.0, &cfg).unwrap();
        let b = sample_fill_phase(&m, FillMode::Plain, 0.0, 1.0, &g, 0.0, &cfg).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let c = pool.install(|| sample_fill_phase(&m, FillMode::Plain, 0.0, 1.0, &g, 0.0, &cfg).unwrap());
        assert_eq!(a, c);
    }

    #[test]
    fn reflected_paths_respect_barriers() {
        let m = LevyModel::brownian(-0.5, 1.0).unwrap();
        let s = Sampler::new(&m).unwrap();
        let g = PiecewisePolynomial::new(vec![0.0], vec![vec![1e9], vec![0.0]]).unwrap();
        let mut rng = path_rng(3, 0);
        // a negative level would accrue the huge rate
        let out = fill_phase(&s, FillMode::Reflected, 0.1, 0.5, &g, 0.0, 1e-2, 50.0, &mut rng);
        assert!(out.undiscounted_cost < 1e-6);
        let rel = Sampler::new(&LevyModel::brownian(3.0, 1.0).unwrap().shifted(1.0).unwrap()).unwrap();
        let cap = PiecewisePolynomial::new(vec![1.0 + 1e-12], vec![vec![0.0], vec![1e9]]).unwrap();
        let out = release_phase(&rel, 0.9, 0.0, 1.0, &cap, 0.0, 1e-2, 5.0, &mut rng);
        assert!(out.undiscounted_cost < 1e-6);
    }

    #[test]
    fn poisson_jump_counts() {
        let m = LevyModel::compound_poisson(2.0, 3.0, JumpDistribution::Exponential { rate: 1.0 }).unwrap();
        let cfg = small(1, 11);
        let counts: Vec<f64> = (0..2000)
            .map(|p| simulate_input_path(&m, &cfg, 2.0, p).unwrap().jumps.len() as f64)
            .collect();
        let e = estimate("count", &counts).unwrap();
        assert!(e.agrees(6.0, 4.0), "{e:?}");
    }

    #[test]
    fn cycle_records_add_up() {
        let m = LevyModel::compound_poisson(2.0, 1.0, JumpDistribution::Exponential { rate: 1.0 }).unwrap();
        let costs = CostSpec::new(1.0, 2.0, 0.0, PiecewisePolynomial::zero(), PiecewisePolynomial::zero()).unwrap();
        let p = DamProblem::new(m, PolicyParams::new(1.0, 0.2, 1.0, 3.0).unwrap(), costs, FillMode::Reflected).unwrap();
        let cfg = PathConfig {
            max_cycles: 3,
            ..small(20, 1)
        };
        let paths = run_policy_cycles(&p, 0.0, 0.2, &cfg).unwrap();
        for path in &paths {
            assert_eq!(path.cycles.len(), 3);
            for c in &path.cycles {
                assert!((c.undiscounted_cost - 3.0).abs() < 1e-12);
                assert!(c.overshoot >= 1.0);
            }
        }
        let mut buf = Vec::new();
        write_cycle_records(&mut buf, &paths).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 60);
    }
}
