//! Spectrally positive Lévy input families.
//!
//! Every model is stored through the coefficients of
//!
//! ```text
//! φ(θ) = cθ + σ²θ²/2 − ∫₀^∞ (1 − e^{−θx}) ν(dx),      E[e^{−θ I_t}] = e^{tφ(θ)}
//! ```
//!
//! For Brownian input `c = −μ` (the drift of `I`); for the bounded variation
//! families `c = ζ > 0`, the rate at which the content drains between jumps.
//! The mean input rate is `E[I₁] = −φ'(0+)`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{DamError, Result};
use crate::quad::{self, QuadOptions};
use crate::special::{erfc, exp_integral_e1};

/// The parametric families supported by the library.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LevyKind {
    BrownianDrift,
    CompoundPoissonDrift,
    GammaDrift,
    InverseGaussianDrift,
    GenericBoundedVariation,
}

/// Jump size law of a compound Poisson input.
#[derive(Debug, Clone, PartialEq)]
pub enum JumpDistribution {
    Exponential { rate: f64 },
    /// Mixture of exponentials; weights sum to one.
    HyperExponential { weights: Vec<f64>, rates: Vec<f64> },
}

impl JumpDistribution {
    fn components(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        const ONE: f64 = 1.0;
        let (weights, rates): (&[f64], &[f64]) = match self {
            JumpDistribution::Exponential { rate } => (std::slice::from_ref(&ONE), std::slice::from_ref(rate)),
            JumpDistribution::HyperExponential { weights, rates } => (weights, rates),
        };
        weights.iter().copied().zip(rates.iter().copied())
    }

    fn validate(&self) -> Result<()> {
        if self.components().next().is_none() {
            return Err(DamError::InvalidModel("empty jump mixture".into()));
        }
        if let JumpDistribution::HyperExponential { weights, rates } = self {
            if weights.len() != rates.len() {
                return Err(DamError::InvalidModel(
                    "hyperexponential weights and rates differ in length".into(),
                ));
            }
            let total: f64 = weights.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(DamError::InvalidModel(format!(
                    "hyperexponential weights sum to {total}, expected 1"
                )));
            }
        }
        for (w, r) in self.components() {
            if !(w > 0.0 && r > 0.0 && w.is_finite() && r.is_finite()) {
                return Err(DamError::InvalidModel(format!(
                    "jump component (weight {w}, rate {r}) must be positive"
                )));
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.components().map(|(w, r)| w / r).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.components().map(|(w, r)| 2.0 * w / (r * r)).sum()
    }

    pub fn density(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.components().map(|(w, r)| w * r * (-r * x).exp()).sum()
    }

    /// `P(J ≥ x)`.
    pub fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        self.components().map(|(w, r)| w * (-r * x).exp()).sum()
    }

    /// `E[e^{−sJ}]`, analytic off the negative real axis beyond `−min rate`.
    pub fn laplace(&self, s: Complex64) -> Complex64 {
        self.components()
            .map(|(w, r)| w * r / (s + r))
            .sum()
    }

    fn laplace_derivative(&self, theta: f64) -> f64 {
        // d/dθ E[e^{−θJ}] = −Σ w r/(r+θ)²
        -self
            .components()
            .map(|(w, r)| w * r / ((r + theta) * (r + theta)))
            .sum::<f64>()
    }
}

/// User supplied Lévy measure of a bounded variation input: density,
/// tail `x ↦ ν([x, ∞))` and first moment `μ = ∫ x ν(dx)`.
#[derive(Clone)]
pub struct GenericMeasure {
    density: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    tail: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    mean: f64,
}

impl GenericMeasure {
    pub fn new(
        density: impl Fn(f64) -> f64 + Send + Sync + 'static,
        tail: impl Fn(f64) -> f64 + Send + Sync + 'static,
        mean: f64,
    ) -> Self {
        Self {
            density: Arc::new(density),
            tail: Arc::new(tail),
            mean,
        }
    }
}

impl fmt::Debug for GenericMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GenericMeasure").field("mean", &self.mean).finish_non_exhaustive()
    }
}

/// Jump measure `ν` on `(0, ∞)`.
#[derive(Debug, Clone)]
pub enum LevyMeasure {
    None,
    CompoundPoisson { rate: f64, jumps: JumpDistribution },
    /// `ν(dx) = a e^{−bx}/x dx`.
    Gamma { a: f64, b: f64 },
    /// `ν(dx) = (2πx³)^{−1/2} σ^{−1} e^{−x c²/(2σ²)} dx`.
    InverseGaussian { sigma: f64, c: f64 },
    Generic(GenericMeasure),
}

impl LevyMeasure {
    pub fn is_zero(&self) -> bool {
        matches!(self, LevyMeasure::None)
    }

    /// Density of `ν` at `x > 0` (zero for `x ≤ 0`).
    pub fn density(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            LevyMeasure::None => 0.0,
            LevyMeasure::CompoundPoisson { rate, jumps } => rate * jumps.density(x),
            LevyMeasure::Gamma { a, b } => a * (-b * x).exp() / x,
            LevyMeasure::InverseGaussian { sigma, c } => {
                let k = c * c / (2.0 * sigma * sigma);
                (-k * x).exp() / (sigma * (2.0 * std::f64::consts::PI * x * x * x).sqrt())
            }
            LevyMeasure::Generic(g) => (g.density)(x),
        }
    }

    /// Tail `ν([x, ∞))`; infinite at `x = 0` for the infinite activity laws.
    pub fn tail(&self, x: f64) -> f64 {
        match self {
            LevyMeasure::None => 0.0,
            LevyMeasure::CompoundPoisson { rate, jumps } => rate * jumps.survival(x),
            LevyMeasure::Gamma { a, b } => {
                if x <= 0.0 {
                    f64::INFINITY
                } else {
                    a * exp_integral_e1(b * x)
                }
            }
            LevyMeasure::InverseGaussian { sigma, c } => {
                if x <= 0.0 {
                    return f64::INFINITY;
                }
                let k = c * c / (2.0 * sigma * sigma);
                let pi = std::f64::consts::PI;
                let v = 2.0 * (-k * x).exp() / x.sqrt() - 2.0 * (pi * k).sqrt() * erfc((k * x).sqrt());
                (v / (sigma * (2.0 * pi).sqrt())).max(0.0)
            }
            LevyMeasure::Generic(g) => (g.tail)(x),
        }
    }

    /// `μ = ∫₀^∞ x ν(dx)`.
    pub fn mean(&self) -> f64 {
        match self {
            LevyMeasure::None => 0.0,
            LevyMeasure::CompoundPoisson { rate, jumps } => rate * jumps.mean(),
            LevyMeasure::Gamma { a, b } => a / b,
            LevyMeasure::InverseGaussian { c, .. } => 1.0 / c,
            LevyMeasure::Generic(g) => g.mean,
        }
    }

    /// `Ψ(θ) = ∫ (1 − e^{−θx}) ν(dx)` for real `θ ≥ 0`.
    pub fn laplace_integral(&self, theta: f64) -> f64 {
        match self {
            LevyMeasure::Generic(g) => {
                let d = g.density.clone();
                let opts = QuadOptions {
                    abs_tol: 1e-12,
                    rel_tol: 1e-12,
                    max_intervals: 600,
                };
                let near = quad::integrate(|x| -(-theta * x).exp_m1() * d(x), 0.0, 1.0, opts);
                let far = quad::integrate_to_inf(|x| -(-theta * x).exp_m1() * d(x), 1.0, opts);
                near.value + far.value
            }
            _ => self
                .laplace_integral_complex(Complex64::new(theta, 0.0))
                .map(|z| z.re)
                .unwrap_or(0.0),
        }
    }

    /// Analytic continuation of `Ψ` to complex arguments; `None` for a
    /// generic measure given only numerically.
    pub fn laplace_integral_complex(&self, s: Complex64) -> Option<Complex64> {
        Some(match self {
            LevyMeasure::None => Complex64::new(0.0, 0.0),
            LevyMeasure::CompoundPoisson { rate, jumps } => *rate * (1.0 - jumps.laplace(s)),
            LevyMeasure::Gamma { a, b } => *a * (1.0 + s / *b).ln(),
            LevyMeasure::InverseGaussian { sigma, c } => {
                ((*c * *c + 2.0 * sigma * sigma * s).sqrt() - *c) / (sigma * sigma)
            }
            LevyMeasure::Generic(_) => return None,
        })
    }

    /// `Ψ'(θ) = ∫ x e^{−θx} ν(dx)`.
    pub fn laplace_integral_derivative(&self, theta: f64) -> f64 {
        match self {
            LevyMeasure::None => 0.0,
            LevyMeasure::CompoundPoisson { rate, jumps } => -rate * jumps.laplace_derivative(theta),
            LevyMeasure::Gamma { a, b } => a / (b + theta),
            LevyMeasure::InverseGaussian { sigma, c } => 1.0 / (c * c + 2.0 * sigma * sigma * theta).sqrt(),
            LevyMeasure::Generic(g) => {
                let d = g.density.clone();
                let opts = QuadOptions {
                    abs_tol: 1e-12,
                    rel_tol: 1e-12,
                    max_intervals: 600,
                };
                let near = quad::integrate(|x| x * (-theta * x).exp() * d(x), 0.0, 1.0, opts);
                let far = quad::integrate_to_inf(|x| x * (-theta * x).exp() * d(x), 1.0, opts);
                near.value + far.value
            }
        }
    }

    /// `∫₀¹ x ν(dx)`, the compensator mass of the small jumps.
    pub fn small_jump_mean(&self) -> f64 {
        let opts = QuadOptions {
            abs_tol: 1e-13,
            rel_tol: 1e-13,
            max_intervals: 600,
        };
        quad::integrate(|x| x * self.density(x), 0.0, 1.0, opts).value
    }
}

/// A spectrally positive Lévy input.
#[derive(Debug, Clone)]
pub struct LevyModel {
    kind: LevyKind,
    linear: f64,
    sigma2: f64,
    measure: LevyMeasure,
}

impl LevyModel {
    /// `I_t = μt + σB_t`.
    pub fn brownian(mu: f64, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) || !mu.is_finite() {
            return Err(DamError::InvalidModel(format!(
                "Brownian input needs finite drift and sigma2 > 0 (got mu={mu}, sigma2={sigma2})"
            )));
        }
        Ok(Self {
            kind: LevyKind::BrownianDrift,
            linear: -mu,
            sigma2,
            measure: LevyMeasure::None,
        })
    }

    /// `I_t = −ζt + Σ jumps`, jumps arriving at `rate`.
    pub fn compound_poisson(zeta: f64, rate: f64, jumps: JumpDistribution) -> Result<Self> {
        jumps.validate()?;
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(DamError::InvalidModel(format!("jump rate must be positive, got {rate}")));
        }
        Self::bounded_variation(
            LevyKind::CompoundPoissonDrift,
            zeta,
            LevyMeasure::CompoundPoisson { rate, jumps },
        )
    }

    /// Gamma subordinator with Lévy measure `a e^{−bx}/x dx` minus drift `ζ`.
    pub fn gamma(zeta: f64, a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(DamError::InvalidModel(format!(
                "gamma measure needs a, b > 0 (got a={a}, b={b})"
            )));
        }
        Self::bounded_variation(LevyKind::GammaDrift, zeta, LevyMeasure::Gamma { a, b })
    }

    /// Inverse Gaussian subordinator with parameters `σ, c > 0` minus drift `ζ`.
    pub fn inverse_gaussian(zeta: f64, sigma: f64, c: f64) -> Result<Self> {
        if !(sigma > 0.0 && c > 0.0) {
            return Err(DamError::InvalidModel(format!(
                "inverse Gaussian measure needs sigma, c > 0 (got sigma={sigma}, c={c})"
            )));
        }
        Self::bounded_variation(
            LevyKind::InverseGaussianDrift,
            zeta,
            LevyMeasure::InverseGaussian { sigma, c },
        )
    }

    /// Bounded variation input with a numerically supplied Lévy measure.
    pub fn generic_bounded_variation(zeta: f64, measure: GenericMeasure) -> Result<Self> {
        if !(measure.mean.is_finite() && measure.mean >= 0.0) {
            return Err(DamError::InvalidModel(format!(
                "generic measure needs a finite first moment, got {}",
                measure.mean
            )));
        }
        Self::bounded_variation(
            LevyKind::GenericBoundedVariation,
            zeta,
            LevyMeasure::Generic(measure),
        )
    }

    fn bounded_variation(kind: LevyKind, zeta: f64, measure: LevyMeasure) -> Result<Self> {
        if !(zeta > 0.0 && zeta.is_finite()) {
            return Err(DamError::InvalidModel(format!(
                "bounded variation input needs zeta > 0, got {zeta}"
            )));
        }
        Ok(Self {
            kind,
            linear: zeta,
            sigma2: 0.0,
            measure,
        })
    }

    pub fn kind(&self) -> LevyKind {
        self.kind
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn measure(&self) -> &LevyMeasure {
        &self.measure
    }

    /// Coefficient `c` of `θ` in `φ`.
    pub fn linear_coefficient(&self) -> f64 {
        self.linear
    }

    pub fn has_bounded_variation(&self) -> bool {
        self.sigma2 == 0.0
    }

    /// `ζ`, present iff the input has bounded variation.
    pub fn zeta(&self) -> Option<f64> {
        self.has_bounded_variation().then_some(self.linear)
    }

    /// Drift term `a` of the Lévy–Khintchine form with the `1{x<1}` cutoff.
    pub fn drift_a(&self) -> f64 {
        -self.linear + self.measure.small_jump_mean()
    }

    /// `ρ = μ/ζ` for bounded variation inputs.
    pub fn rho(&self) -> Option<f64> {
        self.zeta().map(|z| self.measure.mean() / z)
    }

    /// Model of `I − M`: `φ_M(θ) = φ(θ) + θM`.
    pub fn shifted(&self, release_rate: f64) -> Result<Self> {
        if !(release_rate > 0.0 && release_rate.is_finite()) {
            return Err(DamError::Domain(format!(
                "release rate must be positive, got {release_rate}"
            )));
        }
        let mut m = self.clone();
        m.linear += release_rate;
        Ok(m)
    }

    pub fn phi(&self, theta: f64) -> Result<f64> {
        if theta < 0.0 || theta.is_nan() {
            return Err(DamError::Domain(format!("phi needs theta >= 0, got {theta}")));
        }
        Ok(self.phi_unchecked(theta))
    }

    pub(crate) fn phi_unchecked(&self, theta: f64) -> f64 {
        if theta == 0.0 {
            return 0.0;
        }
        self.linear * theta + 0.5 * self.sigma2 * theta * theta - self.measure.laplace_integral(theta)
    }

    /// `φ'(θ)` for `θ ≥ 0`.
    pub fn phi_derivative(&self, theta: f64) -> f64 {
        self.linear + self.sigma2 * theta - self.measure.laplace_integral_derivative(theta)
    }

    /// `φ` continued to the complex plane, `None` for generic measures.
    pub fn phi_complex(&self, s: Complex64) -> Option<Complex64> {
        let psi = self.measure.laplace_integral_complex(s)?;
        Some(self.linear * s + 0.5 * self.sigma2 * s * s - psi)
    }

    /// `φ` through the compensated Lévy–Khintchine integral,
    /// `−aθ + σ²θ²/2 − ∫(1 − e^{−θx} − θx 1{x<1}) ν(dx)`, evaluated by
    /// quadrature. Agrees with [`phi`](Self::phi) whenever both apply.
    pub fn phi_compensated(&self, theta: f64) -> f64 {
        let opts = QuadOptions {
            abs_tol: 1e-13,
            rel_tol: 1e-13,
            max_intervals: 800,
        };
        let small = quad::integrate(
            |x| (-(-theta * x).exp_m1() - theta * x) * self.measure.density(x),
            0.0,
            1.0,
            opts,
        )
        .value;
        let large = quad::integrate_to_inf(
            |x| -(-theta * x).exp_m1() * self.measure.density(x),
            1.0,
            opts,
        )
        .value;
        -self.drift_a() * theta + 0.5 * self.sigma2 * theta * theta - small - large
    }

    /// `E[I₁] = −φ'(0+)`.
    pub fn mean_input(&self) -> f64 {
        -self.linear + self.measure.mean()
    }

    /// `η(α)`, the largest root of `φ(θ) = α`.
    pub fn eta(&self, alpha: f64) -> Result<f64> {
        if alpha < 0.0 || alpha.is_nan() {
            return Err(DamError::Domain(format!("eta needs alpha >= 0, got {alpha}")));
        }
        largest_root(|t| self.phi_unchecked(t), Some(|t| self.phi_derivative(t)), alpha)
    }
}

/// Largest root of `f(θ) = α` for a convex `f` with `f(0) = 0`.
///
/// Bisects on the monotone predicate `f(θ) > α` over `[0, θ_hi]`, doubling
/// `θ_hi` until `f(θ_hi) > α`, and polishes with Newton when a derivative is
/// supplied.
pub fn largest_root<F, D>(f: F, derivative: Option<D>, alpha: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut hi = 1.0;
    let mut expansions = 0;
    while f(hi) <= alpha {
        hi *= 2.0;
        expansions += 1;
        if expansions > 1000 || !hi.is_finite() {
            return Err(DamError::Convergence(format!(
                "could not bracket the root of phi(theta) = {alpha}"
            )));
        }
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > alpha {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if lo == 0.0 {
        // f(θ) > α for every probed θ > 0: the only root is θ = 0
        return Ok(0.0);
    }
    let mut root = 0.5 * (lo + hi);
    if let Some(df) = derivative {
        for _ in 0..4 {
            let slope = df(root);
            if !(slope > 0.0) {
                break;
            }
            let next = root - (f(root) - alpha) / slope;
            if !(next > 0.0) || (next - root).abs() > (hi - lo).max(1e-12 * root) * 4.0 {
                break;
            }
            if next == root {
                break;
            }
            root = next;
        }
    }
    Ok(root)
}
