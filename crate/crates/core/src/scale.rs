//! Scale functions `W^(α)`, `Z^(α)`, `W̄^(α)` and `W^(α)'₊` of a spectrally
//! positive input.
//!
//! `W^(α)` is the increasing function on `[0, ∞)` with
//! `∫₀^∞ e^{−βx} W^(α)(x) dx = 1/(φ(β) − α)` for `β > η(α)`, and
//! `Z^(α)(x) = 1 + α W̄^(α)(x)`.
//!
//! Three evaluation routes are available:
//!
//! * closed forms for Brownian input,
//! * a tabulated convolution series for bounded variation input with `ρ < 1`,
//! * fixed-Talbot inversion of the transform, with the contour shifted by
//!   `η(α)` so that the exponential growth of `W^(α)` costs no accuracy.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DamError, Result};
use crate::levy::{LevyKind, LevyModel};
use crate::quad::{self, QuadOptions};
use crate::series::{ScaleGrid, SeriesOptions};
use crate::talbot::{Talbot, DEFAULT_TALBOT_NODES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMethod {
    ClosedFormBrownian,
    ConvolutionSeries,
    LaplaceInversion,
}

impl ScaleMethod {
    pub fn default_for(model: &LevyModel) -> Self {
        match model.kind() {
            LevyKind::BrownianDrift => ScaleMethod::ClosedFormBrownian,
            LevyKind::GenericBoundedVariation => ScaleMethod::ConvolutionSeries,
            _ => ScaleMethod::LaplaceInversion,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScaleOptions {
    pub talbot_nodes: usize,
    pub series: SeriesOptions,
}

impl Default for ScaleOptions {
    fn default() -> Self {
        Self {
            talbot_nodes: DEFAULT_TALBOT_NODES,
            series: SeriesOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct BrownianForm {
    sigma2: f64,
    delta: f64,
    // exponents (μ ± δ)/σ²
    a: f64,
    b: f64,
}

/// `(e^u − 1)/u`, continuous at zero.
fn exprel(u: f64) -> f64 {
    if u.abs() < 1e-5 {
        1.0 + u * (0.5 + u / 6.0)
    } else {
        u.exp_m1() / u
    }
}

impl BrownianForm {
    fn new(model: &LevyModel, alpha: f64) -> Self {
        let mu = -model.linear_coefficient();
        let sigma2 = model.sigma2();
        let delta = (mu * mu + 2.0 * alpha * sigma2).sqrt();
        Self {
            sigma2,
            delta,
            a: (mu + delta) / sigma2,
            b: (mu - delta) / sigma2,
        }
    }

    fn w(&self, x: f64) -> f64 {
        // (e^{ax} − e^{bx})/δ written without cancellation
        (self.b * x).exp() * x * (2.0 / self.sigma2) * exprel(2.0 * self.delta * x / self.sigma2)
    }

    fn w_prime(&self, x: f64) -> f64 {
        self.b * self.w(x) + (2.0 / self.sigma2) * (self.a * x).exp()
    }

    fn w_bar(&self, x: f64) -> f64 {
        if self.delta == 0.0 {
            return x * x / self.sigma2;
        }
        if self.delta * x / self.sigma2 < 1e-3 {
            return quad::integrate(|y| self.w(y), 0.0, x, QuadOptions::default()).value;
        }
        let ea = x * exprel(self.a * x);
        let eb = x * exprel(self.b * x);
        (ea - eb) / self.delta
    }
}

/// Evaluators of the scale functions of one model at one discount rate.
///
/// Cloning is cheap; a tabulated series grid is shared.
#[derive(Debug, Clone)]
pub struct ScaleFunctionSet {
    model: LevyModel,
    alpha: f64,
    method: ScaleMethod,
    eta: f64,
    w_zero: f64,
    talbot: Talbot,
    brownian: Option<BrownianForm>,
    grid: Option<Arc<ScaleGrid>>,
}

impl ScaleFunctionSet {
    /// Picks the closed form for Brownian input, the series for generic
    /// measures and Laplace inversion otherwise.
    pub fn new(model: &LevyModel, alpha: f64) -> Result<Self> {
        Self::with_method(model, alpha, ScaleMethod::default_for(model), ScaleOptions::default())
    }

    pub fn with_method(model: &LevyModel, alpha: f64, method: ScaleMethod, opts: ScaleOptions) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(DamError::Domain(format!("discount rate must be finite and >= 0, got {alpha}")));
        }
        let eta = model.eta(alpha)?;
        let w_zero = model.zeta().map_or(0.0, |z| 1.0 / z);
        let mut set = Self {
            model: model.clone(),
            alpha,
            method,
            eta,
            w_zero,
            talbot: Talbot::new(opts.talbot_nodes),
            brownian: None,
            grid: None,
        };
        match method {
            ScaleMethod::ClosedFormBrownian => {
                if model.kind() != LevyKind::BrownianDrift {
                    return Err(DamError::Unsupported(format!(
                        "closed forms exist only for Brownian input, not {:?}",
                        model.kind()
                    )));
                }
                set.brownian = Some(BrownianForm::new(model, alpha));
            }
            ScaleMethod::ConvolutionSeries => {
                set.grid = Some(Arc::new(ScaleGrid::build(model, alpha, &opts.series)?));
            }
            ScaleMethod::LaplaceInversion => {
                if model.phi_complex(Complex64::new(1.0, 0.0)).is_none() {
                    return Err(DamError::Unsupported(
                        "Laplace inversion needs an analytic exponent; use the series for generic measures".into(),
                    ));
                }
            }
        }
        Ok(set)
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn method(&self) -> ScaleMethod {
        self.method
    }

    /// Cached `η(α)`.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `W^(α)(0+)`: `1/ζ` for bounded variation, zero otherwise.
    pub fn w_at_zero(&self) -> f64 {
        self.w_zero
    }

    /// Upper end of the tabulated range for the series method.
    pub fn grid_limit(&self) -> Option<f64> {
        self.grid.as_ref().map(|g| g.x_max())
    }

    fn transform(&self, s: Complex64) -> Complex64 {
        let phi = self.model.phi_complex(s).expect("analytic exponent checked at construction");
        1.0 / (phi - self.alpha)
    }

    fn invert<F: Fn(Complex64) -> Complex64>(&self, f: F, x: f64) -> f64 {
        self.talbot.invert(f, x, self.eta)
    }

    /// `W^(α)(x)`, zero for `x < 0`.
    ///
    /// # Panics
    /// For the series method, when `x` lies beyond the tabulated range.
    pub fn w(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        if x == 0.0 {
            return self.w_zero;
        }
        match self.method {
            ScaleMethod::ClosedFormBrownian => self.brownian.as_ref().unwrap().w(x),
            ScaleMethod::ConvolutionSeries => self.grid.as_ref().unwrap().w(x),
            ScaleMethod::LaplaceInversion => self.invert(|s| self.transform(s), x).max(0.0),
        }
    }

    /// `∫₀ˣ W^(α)(y) dy` for `x ≥ 0` (zero for negative `x`).
    pub fn w_bar(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self.method {
            ScaleMethod::ClosedFormBrownian => self.brownian.as_ref().unwrap().w_bar(x),
            ScaleMethod::ConvolutionSeries => self.grid.as_ref().unwrap().w_bar(x),
            ScaleMethod::LaplaceInversion => self.invert(|s| self.transform(s) / s, x).max(0.0),
        }
    }

    /// `Z^(α)(x) = 1 + α W̄^(α)(x)`; equal to one for `x ≤ 0`.
    pub fn z(&self, x: f64) -> f64 {
        if self.alpha == 0.0 {
            return 1.0;
        }
        1.0 + self.alpha * self.w_bar(x)
    }

    /// Right derivative `W^(α)'₊(x)` for `x ≥ 0`.
    pub fn w_plus_prime(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match self.method {
            ScaleMethod::ClosedFormBrownian => self.brownian.as_ref().unwrap().w_prime(x),
            ScaleMethod::ConvolutionSeries => self.grid.as_ref().unwrap().w_prime(x),
            ScaleMethod::LaplaceInversion => {
                // transform of the absolutely continuous part of dW
                let w0 = self.w_zero;
                self.invert(|s| s * self.transform(s) - w0, x.max(1e-9))
            }
        }
    }

    /// Right derivative by one-sided differences with Richardson
    /// extrapolation; an independent check on [`w_plus_prime`](Self::w_plus_prime).
    pub fn w_plus_prime_fd(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        let h0 = 1e-2 * x.max(0.1);
        let levels = 4;
        let mut table = vec![vec![0.0; levels]; levels];
        let wx = self.w(x);
        for i in 0..levels {
            let h = h0 / (1 << i) as f64;
            table[i][0] = (self.w(x + h) - wx) / h;
            for j in 1..=i {
                let p = (1u64 << j) as f64;
                table[i][j] = (p * table[i][j - 1] - table[i - 1][j - 1]) / (p - 1.0);
            }
        }
        table[levels - 1][levels - 1]
    }
}

/// Model of `I − M`, whose scale functions are `W_M^(α)`, `Z_M^(α)`.
pub fn shifted_model(model: &LevyModel, release_rate: f64) -> Result<LevyModel> {
    model.shifted(release_rate)
}
