//! Potential densities, exit transforms, exit means and overshoot laws of
//! the fill phase (plain or reflected at the infimum) and of the release
//! phase (`I − M` reflected at `V`, killed below `τ`).
//!
//! Every function reads the discount rate from the [`ScaleFunctionSet`] it
//! receives. Means need a set built at `α = 0`.

use crate::error::{DamError, Result};
use crate::policy::{FillMode, PolicyParams};
use crate::quad::{self, QuadOptions};
use crate::scale::ScaleFunctionSet;

fn quad_opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-11,
        rel_tol: 1e-10,
        max_intervals: 600,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PotentialKind {
    /// Killed on leaving `[a, λ]`.
    TwoSidedKilled,
    /// Killed on first passage above `λ`.
    UpKilled,
    /// Reflected at the infimum, killed above `λ`.
    ReflectedInfimum,
    /// `I − M` reflected at `V`, killed below `τ`.
    ReleasePhase,
}

/// Discounted occupation measure `U^α(x, dy)` of a killed process.
#[derive(Debug, Clone)]
pub struct PotentialDensity {
    kind: PotentialKind,
    scale: ScaleFunctionSet,
    lower: f64,
    upper: f64,
}

pub fn potential_two_sided(s: &ScaleFunctionSet, a: f64, lambda: f64) -> Result<PotentialDensity> {
    if !(a < lambda) {
        return Err(DamError::Domain(format!("two-sided potential needs a < lambda, got a={a}, lambda={lambda}")));
    }
    Ok(PotentialDensity {
        kind: PotentialKind::TwoSidedKilled,
        scale: s.clone(),
        lower: a,
        upper: lambda,
    })
}

pub fn potential_up_killed(s: &ScaleFunctionSet, lambda: f64) -> PotentialDensity {
    PotentialDensity {
        kind: PotentialKind::UpKilled,
        scale: s.clone(),
        lower: f64::NEG_INFINITY,
        upper: lambda,
    }
}

pub fn potential_reflected(s: &ScaleFunctionSet, lambda: f64) -> Result<PotentialDensity> {
    if !(lambda > 0.0) {
        return Err(DamError::Domain(format!("reflected potential needs lambda > 0, got {lambda}")));
    }
    Ok(PotentialDensity {
        kind: PotentialKind::ReflectedInfimum,
        scale: s.clone(),
        lower: 0.0,
        upper: lambda,
    })
}

/// `s_m` must be built on the shifted model of `I − M`.
pub fn potential_release(s_m: &ScaleFunctionSet, tau: f64, v: f64) -> Result<PotentialDensity> {
    if !(tau < v) || !v.is_finite() {
        return Err(DamError::Domain(format!("release potential needs tau < V < inf, got tau={tau}, V={v}")));
    }
    Ok(PotentialDensity {
        kind: PotentialKind::ReleasePhase,
        scale: s_m.clone(),
        lower: tau,
        upper: v,
    })
}

impl PotentialDensity {
    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    pub fn scale(&self) -> &ScaleFunctionSet {
        &self.scale
    }

    /// Support `(lower, upper)` of the measure in `y`.
    pub fn domain(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    fn check_start(&self, x: f64) -> Result<()> {
        let ok = match self.kind {
            PotentialKind::UpKilled => x <= self.upper,
            _ => x >= self.lower && x <= self.upper,
        };
        if ok {
            Ok(())
        } else {
            Err(DamError::Domain(format!(
                "start x={x} outside [{}, {}] for {:?}",
                self.lower, self.upper, self.kind
            )))
        }
    }

    /// Absolutely continuous part `u^α(x, y)`.
    pub fn density(&self, x: f64, y: f64) -> f64 {
        let s = &self.scale;
        let (lo, hi) = (self.lower, self.upper);
        let v = match self.kind {
            PotentialKind::TwoSidedKilled => {
                if y < lo || y > hi {
                    return 0.0;
                }
                s.w(hi - x) * s.w(y - lo) / s.w(hi - lo) - s.w(y - x)
            }
            PotentialKind::UpKilled => {
                if y > hi {
                    return 0.0;
                }
                s.w(hi - x) * (-s.eta() * (hi - y)).exp() - s.w(y - x)
            }
            PotentialKind::ReflectedInfimum => {
                if y <= lo || y > hi {
                    return 0.0;
                }
                s.w(hi - x) * s.w_plus_prime(y) / s.w_plus_prime(hi) - s.w(y - x)
            }
            PotentialKind::ReleasePhase => {
                if y <= lo || y > hi {
                    return 0.0;
                }
                s.z(hi - x) * s.w(y - lo) / s.z(hi - lo) - s.w(y - x)
            }
        };
        v.max(0.0)
    }

    /// Mass of the atom at `y = 0` (reflected kind only).
    pub fn atom_at_zero(&self, x: f64) -> f64 {
        match self.kind {
            PotentialKind::ReflectedInfimum => {
                let s = &self.scale;
                s.w_at_zero() * s.w(self.upper - x) / s.w_plus_prime(self.upper)
            }
            _ => 0.0,
        }
    }

    /// `∫ g(y) U^α(x, dy)`, atom included. `breaks` lists points where `g`
    /// is not smooth.
    pub fn integrate<G: Fn(f64) -> f64>(&self, x: f64, g: G, breaks: &[f64]) -> f64 {
        let opts = quad_opts();
        let mut pts: Vec<f64> = breaks.to_vec();
        pts.push(x);
        let f = |y: f64| {
            let d = self.density(x, y);
            if d == 0.0 {
                0.0
            } else {
                g(y) * d
            }
        };
        let mut total = match self.kind {
            PotentialKind::UpKilled => {
                let split = x.min(self.upper);
                let left = quad::integrate_from_neg_inf(f, split, opts).value;
                left + quad::integrate_pieces(f, split, self.upper, &pts, opts).value
            }
            _ => quad::integrate_pieces(f, self.lower, self.upper, &pts, opts).value,
        };
        let atom = self.atom_at_zero(x);
        if atom > 0.0 {
            total += atom * g(0.0);
        }
        total
    }

    /// Total mass by quadrature.
    pub fn total_mass(&self, x: f64) -> f64 {
        self.integrate(x, |_| 1.0, &[])
    }

    /// Total mass in closed form: `E_x ∫₀^κ e^{−αt} dt` for the killing time `κ`.
    pub fn discounted_duration(&self, x: f64) -> Result<f64> {
        self.check_start(x)?;
        let s = &self.scale;
        let (lo, hi) = (self.lower, self.upper);
        Ok(match self.kind {
            PotentialKind::TwoSidedKilled => s.w(hi - x) * s.w_bar(hi - lo) / s.w(hi - lo) - s.w_bar(hi - x),
            PotentialKind::UpKilled => {
                if s.eta() == 0.0 {
                    f64::INFINITY
                } else {
                    s.w(hi - x) / s.eta() - s.w_bar(hi - x)
                }
            }
            PotentialKind::ReflectedInfimum => s.w(hi - x) * s.w(hi) / s.w_plus_prime(hi) - s.w_bar(hi - x),
            PotentialKind::ReleasePhase => s.z(hi - x) * s.w_bar(hi - lo) / s.z(hi - lo) - s.w_bar(hi - x),
        })
    }

    /// Laplace transform of the killing time.
    pub fn exit_transform(&self, x: f64) -> Result<f64> {
        self.check_start(x)?;
        let s = &self.scale;
        let (lo, hi) = (self.lower, self.upper);
        match self.kind {
            PotentialKind::TwoSidedKilled => {
                // passage above λ plus passage below a
                let ratio = s.w(hi - x) / s.w(hi - lo);
                Ok(s.z(hi - x) - s.z(hi - lo) * ratio + ratio)
            }
            PotentialKind::UpKilled => exit_lt_up(s, x, hi),
            PotentialKind::ReflectedInfimum => exit_lt_reflected(s, x, hi),
            PotentialKind::ReleasePhase => release_exit_lt(s, x, lo, hi),
        }
    }
}

fn require_below(x: f64, lambda: f64) -> Result<()> {
    if x < lambda {
        Ok(())
    } else {
        Err(DamError::Domain(format!("start x={x} must lie below lambda={lambda}")))
    }
}

fn require_undiscounted(s: &ScaleFunctionSet) -> Result<()> {
    if s.alpha() == 0.0 {
        Ok(())
    } else {
        Err(DamError::Domain(format!(
            "exit means need a scale set built at alpha = 0, got alpha = {}",
            s.alpha()
        )))
    }
}

/// `E_x[e^{−α T_λ⁺}]` for the plain input. At `α = 0` this is `P_x(T_λ⁺ < ∞)`.
pub fn exit_lt_up(s: &ScaleFunctionSet, x: f64, lambda: f64) -> Result<f64> {
    require_below(x, lambda)?;
    let alpha = s.alpha();
    let d = lambda - x;
    if alpha == 0.0 {
        let slope = s.model().phi_derivative(0.0);
        return Ok(if s.eta() > 0.0 || slope <= 0.0 {
            1.0
        } else {
            1.0 - slope * s.w(d)
        });
    }
    Ok((s.z(d) - alpha / s.eta() * s.w(d)).clamp(0.0, 1.0))
}

/// `E_x[T_λ⁺]` for the plain input; infinite when `η(0) = 0`.
pub fn exit_mean_up(s: &ScaleFunctionSet, x: f64, lambda: f64) -> Result<f64> {
    require_below(x, lambda)?;
    require_undiscounted(s)?;
    if s.eta() == 0.0 {
        return Ok(f64::INFINITY);
    }
    let d = lambda - x;
    Ok(s.w(d) / s.eta() - s.w_bar(d))
}

fn require_reflected_start(x: f64, lambda: f64) -> Result<()> {
    if (0.0..lambda).contains(&x) {
        Ok(())
    } else {
        Err(DamError::Domain(format!("reflected start needs 0 <= x < lambda, got x={x}, lambda={lambda}")))
    }
}

/// `E_x[e^{−α τ_λ}]` for the input reflected at its infimum.
pub fn exit_lt_reflected(s: &ScaleFunctionSet, x: f64, lambda: f64) -> Result<f64> {
    require_reflected_start(x, lambda)?;
    let alpha = s.alpha();
    if alpha == 0.0 {
        return Ok(1.0);
    }
    let d = lambda - x;
    let dur = s.w(d) * s.w(lambda) / s.w_plus_prime(lambda) - s.w_bar(d);
    Ok((1.0 - alpha * dur).clamp(0.0, 1.0))
}

/// `E_x[τ_λ]` for the input reflected at its infimum.
pub fn exit_mean_reflected(s: &ScaleFunctionSet, x: f64, lambda: f64) -> Result<f64> {
    require_reflected_start(x, lambda)?;
    require_undiscounted(s)?;
    let d = lambda - x;
    Ok(s.w(d) * s.w(lambda) / s.w_plus_prime(lambda) - s.w_bar(d))
}

fn require_release_start(x: f64, tau: f64, v: f64) -> Result<()> {
    if tau <= x && x <= v {
        Ok(())
    } else {
        Err(DamError::Domain(format!("release start needs tau <= x <= V, got tau={tau}, x={x}, V={v}")))
    }
}

/// `E_x[e^{−α T*⁻_τ}]` of the release phase; `V = ∞` is allowed.
pub fn release_exit_lt(s_m: &ScaleFunctionSet, x: f64, tau: f64, v: f64) -> Result<f64> {
    require_release_start(x, tau, v)?;
    if s_m.alpha() == 0.0 {
        // the release phase ends a.s. unless it drifts up with V = ∞
        if v.is_infinite() && s_m.eta() > 0.0 {
            return Ok((-s_m.eta() * (x - tau)).exp());
        }
        return Ok(1.0);
    }
    if v.is_infinite() {
        return Ok((-s_m.eta() * (x - tau)).exp());
    }
    Ok(s_m.z(v - x) / s_m.z(v - tau))
}

/// `E_x[T*⁻_τ]` of the release phase. For `V = ∞` this is the busy period
/// `(x − τ)/(M − E I₁)`, infinite when `M ≤ E I₁`.
pub fn release_exit_mean(s_m: &ScaleFunctionSet, x: f64, tau: f64, v: f64) -> Result<f64> {
    require_release_start(x, tau, v)?;
    require_undiscounted(s_m)?;
    if v.is_infinite() {
        let net = -s_m.model().mean_input();
        return Ok(if net > 0.0 { (x - tau) / net } else { f64::INFINITY });
    }
    Ok(s_m.w_bar(v - tau) - s_m.w_bar(v - x))
}

/// `E[e^{−αT}; endpoint ∈ dz]` for `z ≥ λ` at first passage above `λ`.
#[derive(Debug, Clone)]
pub struct OvershootLaw {
    potential: PotentialDensity,
    x: f64,
    lambda: f64,
    atom: f64,
    exit_transform: f64,
}

/// Overshoot law of the plain input at `T_λ⁺`.
pub fn overshoot_up(s: &ScaleFunctionSet, x: f64, lambda: f64) -> Result<OvershootLaw> {
    let exit = exit_lt_up(s, x, lambda)?;
    OvershootLaw::new(potential_up_killed(s, lambda), x, lambda, exit)
}

/// Overshoot law of the input reflected at its infimum at `τ_λ`.
pub fn overshoot_reflected(s: &ScaleFunctionSet, x: f64, lambda: f64) -> Result<OvershootLaw> {
    let exit = exit_lt_reflected(s, x, lambda)?;
    OvershootLaw::new(potential_reflected(s, lambda)?, x, lambda, exit)
}

impl OvershootLaw {
    fn new(potential: PotentialDensity, x: f64, lambda: f64, exit_transform: f64) -> Result<Self> {
        let model = potential.scale().model();
        // creeping happens only through a Gaussian part; the families here
        // carry either a Gaussian part or jumps, never both
        let atom = if model.measure().is_zero() {
            exit_transform
        } else if model.sigma2() == 0.0 {
            0.0
        } else {
            return Err(DamError::Unsupported(
                "overshoot laws of jump diffusions are not supported".into(),
            ));
        };
        Ok(Self {
            potential,
            x,
            lambda,
            atom,
            exit_transform,
        })
    }

    pub fn level(&self) -> f64 {
        self.lambda
    }

    /// Mass at `z = λ` (creeping).
    pub fn atom_at_lambda(&self) -> f64 {
        self.atom
    }

    /// The exit transform the law must integrate to.
    pub fn exit_transform(&self) -> f64 {
        self.exit_transform
    }

    /// Density in `z > λ`: `∫ U^α(x, dy) ν(z − y)`.
    pub fn density(&self, z: f64) -> f64 {
        if z <= self.lambda {
            return 0.0;
        }
        let measure = self.potential.scale().model().measure();
        if measure.is_zero() {
            return 0.0;
        }
        self.potential.integrate(self.x, |y| measure.density(z - y), &[])
    }

    /// `∫_{(λ,∞)} G(z) density(z) dz + atom · G(λ)`.
    pub fn expect<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        let jump = if self.potential.scale().model().measure().is_zero() {
            0.0
        } else {
            let opts = QuadOptions {
                abs_tol: 1e-10,
                rel_tol: 1e-9,
                max_intervals: 400,
            };
            quad::integrate_to_inf(|z| g(z) * self.density(z), self.lambda, opts).value
        };
        jump + self.atom * g(self.lambda)
    }

    /// Like [`expect`](Self::expect), with the jump part split at `breaks`
    /// (points where `G` has kinks) before mapping the tail.
    pub fn expect_with_breaks<G: Fn(f64) -> f64>(&self, g: G, breaks: &[f64]) -> f64 {
        if self.potential.scale().model().measure().is_zero() {
            return self.atom * g(self.lambda);
        }
        let opts = QuadOptions {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            max_intervals: 400,
        };
        let mut pts: Vec<f64> = breaks.iter().copied().filter(|&b| b > self.lambda && b.is_finite()).collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let f = |z: f64| g(z) * self.density(z);
        let last = pts.last().copied().unwrap_or(self.lambda);
        let finite = quad::integrate_pieces(f, self.lambda, last, &pts, opts).value;
        finite + quad::integrate_to_inf(f, last, opts).value + self.atom * g(self.lambda)
    }

    /// Mass of the law on `(λ, z]`, atom included.
    pub fn mass_below(&self, z: f64) -> f64 {
        if z < self.lambda {
            return 0.0;
        }
        let opts = QuadOptions {
            abs_tol: 1e-11,
            rel_tol: 1e-10,
            max_intervals: 400,
        };
        self.atom + quad::integrate(|u| self.density(u), self.lambda, z, opts).value
    }

    pub fn total_mass(&self) -> f64 {
        self.expect(|_| 1.0)
    }

    /// `exit transform − jump mass`: the creeping mass implied by the
    /// fluctuation identities, close to zero for pure jump input.
    pub fn creeping_residual(&self) -> f64 {
        self.exit_transform - self.expect(|_| 1.0) + self.atom
    }
}

/// `E_x[e^{−α T*₀}]`: end of the first cycle started at `x`.
///
/// Below `λ` the fill phase is followed by a release phase started at
/// `Z ∧ V`, where `Z` is the overshoot. From `x ≥ λ` only the release phase
/// remains. `s` and `s_m` are the scale sets of `I` and `I − M` at the same
/// discount rate.
pub fn cycle_end_lt(
    s: &ScaleFunctionSet,
    s_m: &ScaleFunctionSet,
    policy: &PolicyParams,
    mode: FillMode,
    x: f64,
) -> Result<f64> {
    let (lambda, tau, v) = (policy.lambda, policy.tau, policy.v);
    if x > v {
        return Err(DamError::Domain(format!("start x={x} exceeds capacity V={v}")));
    }
    if x >= lambda {
        return release_exit_lt(s_m, x, tau, v);
    }
    let law = match mode {
        FillMode::Plain => overshoot_up(s, x, lambda)?,
        FillMode::Reflected => overshoot_reflected(s, x, lambda)?,
    };
    if s_m.alpha() == 0.0 && !(v.is_infinite() && s_m.eta() > 0.0) {
        return Ok(law.total_mass());
    }
    if v.is_infinite() {
        let eta_m = s_m.eta();
        return Ok(law.expect(|z| (-eta_m * (z - tau)).exp()));
    }
    let denom = s_m.z(v - tau);
    Ok(law.expect_with_breaks(|z| s_m.z(v - z.min(v)), &[v]) / denom)
}
