//! Cost functionals of a `P^M_{λ,τ}` policy: nothing is released until the
//! content reaches `λ`, then water leaves at rate `M` until the content
//! falls to `τ`. Each cycle costs `M·K₂` when it starts, `M·K₁` when the
//! release switches on, earns `R` per unit released, and accrues running
//! costs `g` (filling) and `g*` (releasing).
//!
//! Discounted quantities are assembled from discounted durations
//! `D = E∫₀^κ e^{−αt} dt`, so `1 − E[e^{−ακ}] = αD` never loses digits as
//! `α ↓ 0`.

use serde::{Deserialize, Serialize};

use crate::error::{DamError, Result};
use crate::exit::{self, OvershootLaw, PotentialDensity};
use crate::levy::LevyModel;
use crate::scale::{ScaleFunctionSet, ScaleMethod, ScaleOptions};

/// How the content behaves below `λ` while nothing is released.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FillMode {
    /// The raw input, free to go negative.
    Plain,
    /// The input reflected at its running infimum, so content stays `≥ 0`.
    Reflected,
}

/// `(λ, τ, M, V)` with `0 ≤ τ < λ ≤ V` and `M > 0`. `V` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub lambda: f64,
    pub tau: f64,
    pub m: f64,
    pub v: f64,
}

impl PolicyParams {
    pub fn new(lambda: f64, tau: f64, m: f64, v: f64) -> Result<Self> {
        let p = Self { lambda, tau, m, v };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { lambda, tau, m, v } = *self;
        if !(0.0 <= tau && tau < lambda && lambda <= v && lambda.is_finite()) {
            return Err(DamError::InvalidPolicy(format!(
                "need 0 <= tau < lambda <= V, got tau={tau}, lambda={lambda}, V={v}"
            )));
        }
        if !(m > 0.0 && m.is_finite()) {
            return Err(DamError::InvalidPolicy(format!("release rate must be positive, got {m}")));
        }
        Ok(())
    }
}

/// Piecewise polynomial in `y` with sorted breakpoints. Piece `i` covers
/// `[breaks[i−1], breaks[i])`; the first and last pieces are unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewisePolynomial {
    breaks: Vec<f64>,
    /// Coefficients of each piece in increasing powers of `y`.
    pieces: Vec<Vec<f64>>,
}

impl PiecewisePolynomial {
    pub fn new(breaks: Vec<f64>, pieces: Vec<Vec<f64>>) -> Result<Self> {
        if pieces.len() != breaks.len() + 1 {
            return Err(DamError::InvalidCost(format!(
                "{} breakpoints need {} pieces, got {}",
                breaks.len(),
                breaks.len() + 1,
                pieces.len()
            )));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) || breaks.iter().any(|b| !b.is_finite()) {
            return Err(DamError::InvalidCost("breakpoints must be finite and strictly increasing".into()));
        }
        if pieces.iter().flatten().any(|c| !c.is_finite()) {
            return Err(DamError::InvalidCost("polynomial coefficients must be finite".into()));
        }
        Ok(Self { breaks, pieces })
    }

    pub fn constant(c: f64) -> Self {
        Self {
            breaks: Vec::new(),
            pieces: vec![vec![c]],
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn eval(&self, y: f64) -> f64 {
        let i = self.breaks.partition_point(|&b| b <= y);
        self.pieces[i].iter().rev().fold(0.0, |acc, c| acc * y + c)
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().flatten().all(|&c| c == 0.0)
    }

    fn degree(piece: &[f64]) -> usize {
        piece.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    /// Bounded on `(−∞, b]` iff the first piece is constant.
    pub fn bounded_below(&self) -> bool {
        Self::degree(&self.pieces[0]) == 0
    }

    /// Bounded on `[a, ∞)` iff the last piece is constant.
    pub fn bounded_above(&self) -> bool {
        Self::degree(self.pieces.last().unwrap()) == 0
    }
}

/// `K₁`, `K₂`, `R` and the running cost rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    pub k1: f64,
    pub k2: f64,
    pub r: f64,
    pub g: PiecewisePolynomial,
    pub g_star: PiecewisePolynomial,
}

impl CostSpec {
    pub fn new(k1: f64, k2: f64, r: f64, g: PiecewisePolynomial, g_star: PiecewisePolynomial) -> Result<Self> {
        let c = Self { k1, k2, r, g, g_star };
        c.validate()?;
        Ok(c)
    }

    pub fn zero() -> Self {
        Self {
            k1: 0.0,
            k2: 0.0,
            r: 0.0,
            g: PiecewisePolynomial::zero(),
            g_star: PiecewisePolynomial::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("K1", self.k1), ("K2", self.k2), ("R", self.r)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(DamError::InvalidCost(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// `E_x ∫₀^{T̂} e^{−αt} g(Z_t) dt` over the fill phase.
pub fn fill_cost(s: &ScaleFunctionSet, x: f64, lambda: f64, g: &PiecewisePolynomial, mode: FillMode) -> Result<f64> {
    if !(x < lambda) {
        return Err(DamError::Domain(format!("fill cost needs x < lambda, got x={x}, lambda={lambda}")));
    }
    if g.is_zero() {
        return Ok(0.0);
    }
    let p = fill_potential(s, lambda, mode)?;
    if mode == FillMode::Plain {
        if !g.bounded_below() {
            return Err(DamError::InvalidCost(
                "g must be constant below its first breakpoint for plain input".into(),
            ));
        }
        if s.eta() == 0.0 {
            return Err(DamError::InfiniteMean(
                "plain fill phase with eta = 0 has infinite occupation".into(),
            ));
        }
    } else if x < 0.0 {
        return Err(DamError::Domain(format!("reflected fill needs x >= 0, got {x}")));
    }
    Ok(p.integrate(x, |y| g.eval(y), g.breaks()))
}

/// `E_x ∫₀^{T*} e^{−αt} g*(Z_t) dt` over the release phase; `s_m` belongs to `I − M`.
pub fn release_cost(s_m: &ScaleFunctionSet, x: f64, tau: f64, v: f64, g_star: &PiecewisePolynomial) -> Result<f64> {
    if !v.is_finite() {
        return Err(DamError::Unsupported("release costs need a finite capacity V".into()));
    }
    if !(tau <= x && x <= v) {
        return Err(DamError::Domain(format!("release cost needs tau <= x <= V, got x={x}")));
    }
    if g_star.is_zero() || x == tau {
        return Ok(0.0);
    }
    let p = exit::potential_release(s_m, tau, v)?;
    Ok(p.integrate(x, |y| g_star.eval(y), g_star.breaks()))
}

fn fill_potential(s: &ScaleFunctionSet, lambda: f64, mode: FillMode) -> Result<PotentialDensity> {
    match mode {
        FillMode::Plain => Ok(exit::potential_up_killed(s, lambda)),
        FillMode::Reflected => exit::potential_reflected(s, lambda),
    }
}

/// Discounted length of the fill phase, `E_x ∫₀^{T̂} e^{−αt} dt`.
pub fn fill_duration(s: &ScaleFunctionSet, x: f64, lambda: f64, mode: FillMode) -> Result<f64> {
    fill_potential(s, lambda, mode)?.discounted_duration(x)
}

/// Discounted length of the release phase started at `x`.
pub fn release_duration(s_m: &ScaleFunctionSet, x: f64, tau: f64, v: f64) -> Result<f64> {
    if x <= tau {
        return Ok(0.0);
    }
    exit::potential_release(s_m, tau, v)?.discounted_duration(x)
}

/// Pieces of one cycle started at `x`, all discounted at the same rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleSummary {
    /// Expected discounted cost of the cycle.
    pub cost: f64,
    /// `E_x ∫₀^{T*₀} e^{−αt} dt` (the expected length when `α = 0`).
    pub duration: f64,
    /// `E_x[e^{−α T*₀}]`.
    pub end_transform: f64,
}

/// A dam model under a fixed policy and cost structure.
#[derive(Debug, Clone)]
pub struct DamProblem {
    pub model: LevyModel,
    pub policy: PolicyParams,
    pub costs: CostSpec,
    pub mode: FillMode,
    pub scale_method: Option<ScaleMethod>,
    pub scale_options: ScaleOptions,
}

impl DamProblem {
    pub fn new(model: LevyModel, policy: PolicyParams, costs: CostSpec, mode: FillMode) -> Result<Self> {
        policy.validate()?;
        costs.validate()?;
        Ok(Self {
            model,
            policy,
            costs,
            mode,
            scale_method: None,
            scale_options: ScaleOptions::default(),
        })
    }

    pub fn with_policy(&self, policy: PolicyParams) -> Result<Self> {
        policy.validate()?;
        Ok(Self { policy, ..self.clone() })
    }

    fn build(&self, model: &LevyModel, alpha: f64) -> Result<ScaleFunctionSet> {
        let method = self.scale_method.unwrap_or_else(|| ScaleMethod::default_for(model));
        ScaleFunctionSet::with_method(model, alpha, method, self.scale_options)
    }

    /// Scale sets of the input and of `I − M` at discount rate `alpha`.
    pub fn scales(&self, alpha: f64) -> Result<(ScaleFunctionSet, ScaleFunctionSet)> {
        let s = self.build(&self.model, alpha)?;
        let s_m = self.build(&self.model.shifted(self.policy.m)?, alpha)?;
        Ok((s, s_m))
    }

    pub fn overshoot(&self, s: &ScaleFunctionSet, x: f64) -> Result<OvershootLaw> {
        match self.mode {
            FillMode::Plain => exit::overshoot_up(s, x, self.policy.lambda),
            FillMode::Reflected => exit::overshoot_reflected(s, x, self.policy.lambda),
        }
    }

    fn check_costs_supported(&self) -> Result<()> {
        if self.policy.v.is_infinite() {
            return Err(DamError::Unsupported("cost functionals need a finite capacity V".into()));
        }
        if self.mode == FillMode::Plain && !self.costs.g.bounded_below() {
            return Err(DamError::InvalidCost(
                "g must be constant below its first breakpoint for plain input".into(),
            ));
        }
        Ok(())
    }

    /// Cost, discounted length and end transform of the cycle started at `x`.
    pub fn cycle_summary(&self, s: &ScaleFunctionSet, s_m: &ScaleFunctionSet, x: f64) -> Result<CycleSummary> {
        self.check_costs_supported()?;
        let PolicyParams { lambda, tau, m, v } = self.policy;
        let alpha = s.alpha();
        let c = &self.costs;
        if x > v {
            return Err(DamError::Domain(format!("start x={x} exceeds capacity V={v}")));
        }
        if x >= lambda {
            let d_rel = release_duration(s_m, x, tau, v)?;
            let k2 = if x == lambda { c.k2 } else { 0.0 };
            return Ok(CycleSummary {
                cost: m * (k2 + c.k1 - c.r * d_rel) + release_cost(s_m, x, tau, v, &c.g_star)?,
                duration: d_rel,
                end_transform: 1.0 - alpha * d_rel,
            });
        }
        if self.mode == FillMode::Reflected && x < 0.0 {
            return Err(DamError::Domain(format!("reflected fill needs x >= 0, got {x}")));
        }
        let d_fill = fill_duration(s, x, lambda, self.mode)?;
        if !d_fill.is_finite() {
            return Err(DamError::InfiniteMean("the fill phase has infinite expected length".into()));
        }
        let law = self.overshoot(s, x)?;
        let q_fill = law.exit_transform();
        let c_fill = fill_cost(s, x, lambda, &c.g, self.mode)?;

        let rel = exit::potential_release(s_m, tau, v)?;
        let mut breaks: Vec<f64> = c.g_star.breaks().to_vec();
        breaks.push(v);
        let d_after = law.expect_with_breaks(|z| rel.discounted_duration(z.min(v)).unwrap_or(0.0), &breaks);
        let c_after = if c.g_star.is_zero() {
            0.0
        } else {
            law.expect_with_breaks(|z| rel.integrate(z.min(v), |y| c.g_star.eval(y), c.g_star.breaks()), &breaks)
        };
        let reached = if alpha == 0.0 { law.total_mass() } else { q_fill };
        Ok(CycleSummary {
            cost: m * (c.k2 + c.k1 * reached - c.r * d_after) + c_fill + c_after,
            duration: d_fill + d_after,
            end_transform: q_fill - alpha * d_after,
        })
    }

    /// `E_x[e^{−α T*₀}]`.
    pub fn cycle_end_lt(&self, alpha: f64, x: f64) -> Result<f64> {
        let (s, s_m) = self.scales(alpha)?;
        exit::cycle_end_lt(&s, &s_m, &self.policy, self.mode, x)
    }

    /// Expected discounted cost of the first cycle from `x`; needs `α > 0`.
    pub fn cycle_cost(&self, alpha: f64, x: f64) -> Result<f64> {
        if !(alpha > 0.0) {
            return Err(DamError::Domain(
                "cycle_cost needs alpha > 0; use long_run_average_cost for alpha = 0".into(),
            ));
        }
        let (s, s_m) = self.scales(alpha)?;
        Ok(self.cycle_summary(&s, &s_m, x)?.cost)
    }

    /// Expected discounted cost over all cycles from `x`.
    pub fn total_discounted_cost(&self, alpha: f64, x: f64) -> Result<f64> {
        if !(alpha > 0.0) {
            return Err(DamError::Domain(format!("total discounted cost needs alpha > 0, got {alpha}")));
        }
        let (s, s_m) = self.scales(alpha)?;
        let from_tau = self.cycle_summary(&s, &s_m, self.policy.tau)?;
        let gap = alpha * from_tau.duration;
        if !(gap > 1e-12) {
            return Err(DamError::Divergence(format!(
                "cycles from tau end with transform {} too close to one",
                1.0 - gap
            )));
        }
        if x == self.policy.tau {
            return Ok(from_tau.cost / gap);
        }
        let first = self.cycle_summary(&s, &s_m, x)?;
        Ok(first.cost + first.end_transform * from_tau.cost / gap)
    }

    /// Long-run average cost per unit time (independent of the start).
    pub fn long_run_average_cost(&self) -> Result<f64> {
        let (num, den) = self.renewal_reward()?;
        Ok(num / den)
    }

    /// Expected undiscounted cost and length of a cycle started at `τ`.
    pub fn renewal_reward(&self) -> Result<(f64, f64)> {
        let (s, s_m) = self.scales(0.0)?;
        if self.mode == FillMode::Plain && s.eta() == 0.0 {
            return Err(DamError::InfiniteMean(
                "plain input with eta(0) = 0 never reaches lambda in finite mean time".into(),
            ));
        }
        let c = self.cycle_summary(&s, &s_m, self.policy.tau)?;
        if !(c.duration.is_finite() && c.duration > 0.0) {
            return Err(DamError::InfiniteMean(format!("mean cycle length is {}", c.duration)));
        }
        Ok((c.cost, c.duration))
    }

    /// `α·C_α(τ)`, which tends to the long-run average as `α ↓ 0`.
    pub fn scaled_discounted_cost(&self, alpha: f64) -> Result<f64> {
        let (s, s_m) = self.scales(alpha)?;
        let c = self.cycle_summary(&s, &s_m, self.policy.tau)?;
        Ok(c.cost / c.duration)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::JumpDistribution;

    fn brownian_problem(costs: CostSpec) -> DamProblem {
        DamProblem::new(
            LevyModel::brownian(1.0, 2.0).unwrap(),
            PolicyParams::new(1.5, 0.5, 2.0, 3.0).unwrap(),
            costs,
            FillMode::Reflected,
        )
        .unwrap()
    }

    fn rich_costs() -> CostSpec {
        CostSpec::new(
            1.0,
            0.5,
            0.3,
            PiecewisePolynomial::new(vec![1.0], vec![vec![0.0, 1.0], vec![1.0]]).unwrap(),
            PiecewisePolynomial::new(vec![2.0], vec![vec![0.5], vec![-1.5, 1.0]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn piecewise_polynomial_eval() {
        let p = PiecewisePolynomial::new(vec![0.0, 1.0], vec![vec![2.0], vec![0.0, 1.0, 1.0], vec![3.0]]).unwrap();
        assert_eq!(p.eval(-5.0), 2.0);
        assert_eq!(p.eval(0.5), 0.75);
        assert_eq!(p.eval(1.0), 3.0);
        assert!(p.bounded_below() && p.bounded_above());
        assert!(PiecewisePolynomial::new(vec![1.0, 0.0], vec![vec![]; 3]).is_err());
    }

    #[test]
    fn policy_validation() {
        assert!(PolicyParams::new(1.0, 1.0, 1.0, 2.0).is_err());
        assert!(PolicyParams::new(1.0, 0.0, 0.0, 2.0).is_err());
        assert!(PolicyParams::new(3.0, 0.0, 1.0, 2.0).is_err());
        assert!(PolicyParams::new(1.0, 0.0, 1.0, f64::INFINITY).is_ok());
    }

    #[test]
    fn zero_costs_vanish() {
        let p = brownian_problem(CostSpec::zero());
        assert_eq!(p.cycle_cost(0.5, 0.2).unwrap(), 0.0);
        assert_eq!(p.total_discounted_cost(0.5, 0.2).unwrap(), 0.0);
        assert_eq!(p.long_run_average_cost().unwrap(), 0.0);
    }

    #[test]
    fn unit_rate_cost_matches_exit_transform() {
        let s = ScaleFunctionSet::new(&LevyModel::brownian(1.0, 2.0).unwrap(), 0.5).unwrap();
        let one = PiecewisePolynomial::constant(1.0);
        for mode in [FillMode::Plain, FillMode::Reflected] {
            let c = fill_cost(&s, 0.2, 1.0, &one, mode).unwrap();
            let q = match mode {
                FillMode::Plain => exit::exit_lt_up(&s, 0.2, 1.0).unwrap(),
                FillMode::Reflected => exit::exit_lt_reflected(&s, 0.2, 1.0).unwrap(),
            };
            assert!((c - (1.0 - q) / 0.5).abs() < 1e-7);
        }
        let s_m = ScaleFunctionSet::new(&LevyModel::brownian(-1.0, 2.0).unwrap(), 0.5).unwrap();
        let c = release_cost(&s_m, 2.0, 0.5, 3.0, &one).unwrap();
        let q = exit::release_exit_lt(&s_m, 2.0, 0.5, 3.0).unwrap();
        assert!((c - (1.0 - q) / 0.5).abs() < 1e-7);
    }

    #[test]
    fn fixed_costs_only() {
        let costs = CostSpec::new(1.3, 0.4, 0.0, PiecewisePolynomial::zero(), PiecewisePolynomial::zero()).unwrap();
        let p = brownian_problem(costs);
        let s = ScaleFunctionSet::new(&p.model, 0.5).unwrap();
        let q = exit::exit_lt_reflected(&s, 0.2, 1.5).unwrap();
        let c = p.cycle_cost(0.5, 0.2).unwrap();
        assert!((c - 2.0 * (0.4 + 1.3 * q)).abs() < 1e-12);
    }

    #[test]
    fn total_cost_at_tau_is_geometric() {
        let p = brownian_problem(rich_costs());
        let c = p.cycle_cost(0.5, 0.5).unwrap();
        let q = p.cycle_end_lt(0.5, 0.5).unwrap();
        let total = p.total_discounted_cost(0.5, 0.5).unwrap();
        assert!((total - c / (1.0 - q)).abs() < 1e-8 * total.abs());
    }

    #[test]
    fn cycle_transform_agrees_with_exit_composition() {
        let m = LevyModel::compound_poisson(2.0, 1.0, JumpDistribution::Exponential { rate: 1.0 }).unwrap();
        let p = DamProblem::new(m, PolicyParams::new(2.0, 0.5, 1.0, 4.0).unwrap(), rich_costs(), FillMode::Reflected)
            .unwrap();
        let (s, s_m) = p.scales(0.3).unwrap();
        let summary = p.cycle_summary(&s, &s_m, 0.5).unwrap();
        let direct = exit::cycle_end_lt(&s, &s_m, &p.policy, p.mode, 0.5).unwrap();
        assert!((summary.end_transform - direct).abs() < 1e-8);
    }

    #[test]
    fn opening_cost_raises_total() {
        let p = brownian_problem(rich_costs());
        let mut q = p.clone();
        q.costs.k1 += 0.5;
        let a = p.total_discounted_cost(0.5, 0.2).unwrap();
        let b = q.total_discounted_cost(0.5, 0.2).unwrap();
        assert!(b > a);
    }

    #[test]
    fn long_run_average_is_abelian_limit() {
        let p = brownian_problem(rich_costs());
        let avg = p.long_run_average_cost().unwrap();
        let near = p.scaled_discounted_cost(1e-4).unwrap();
        assert!((near - avg).abs() < 1e-3 * avg.abs().max(1.0), "{near} vs {avg}");
    }
}
