//! Grid construction of `W^(α)` for bounded variation inputs through the
//! renewal-type series
//!
//! ```text
//! W(x)    = (1/ζ) Σₙ ρⁿ F^{*n}(x),      F the law with density ν([x,∞))/μ
//! W^(α)   = Σₖ αᵏ W^{*(k+1)}
//! ```
//!
//! Convolutions use the trapezoid rule on a uniform grid (through FFT);
//! the grid is halved with Richardson extrapolation until two successive
//! extrapolated tables agree.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{DamError, Result};
use crate::levy::LevyModel;

/// Tabulated `W^(α)`, `W^(α)'` and `∫₀ˣ W^(α)` on `[0, x_max]`.
#[derive(Debug, Clone)]
pub struct ScaleGrid {
    step: f64,
    w: Vec<f64>,
    w_prime: Vec<f64>,
    w_bar: Vec<f64>,
    /// Terms kept in the `ρⁿ F^{*n}` sum.
    pub terms_w: usize,
    /// Terms kept in the `αᵏ W^{*(k+1)}` sum.
    pub terms_alpha: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SeriesOptions {
    pub x_max: f64,
    /// Initial grid step as a fraction of `x_max`.
    pub step_fraction: f64,
    /// Successive Richardson tables must agree to this sup-norm distance.
    pub refine_tol: f64,
    /// Truncate a series once the next term's sup over the grid is below this.
    pub term_tol: f64,
    pub max_points: usize,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            x_max: 20.0,
            step_fraction: 1e-3,
            refine_tol: 1e-7,
            term_tol: 1e-12,
            max_points: 1 << 18,
        }
    }
}

struct Convolver {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Convolver {
    fn new(n: usize) -> Self {
        let len = (2 * n).next_power_of_two();
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    fn spectrum(&self, a: &[f64]) -> Vec<Complex64> {
        let len = self.forward.len();
        let mut buf: Vec<Complex64> = a.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        buf.resize(len, Complex64::new(0.0, 0.0));
        self.forward.process(&mut buf);
        buf
    }

    /// Trapezoid approximation of `∫₀^{x_i} a(y) b(x_i − y) dy` for every
    /// node, with `a` given by its spectrum.
    fn trapezoid(&self, a: &[f64], a_hat: &[Complex64], b: &[f64], h: f64) -> Vec<f64> {
        let len = self.forward.len();
        let mut buf = self.spectrum(b);
        for (x, y) in buf.iter_mut().zip(a_hat) {
            *x *= y;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / len as f64;
        (0..self.n)
            .map(|i| h * (buf[i].re * scale - 0.5 * (a[0] * b[i] + a[i] * b[0])))
            .collect()
    }
}

fn cumulative_trapezoid(g: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(g.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in g.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// `W^(α)` on `n + 1` nodes of step `x_max / n` by plain trapezoid convolutions.
fn series_table(model: &LevyModel, alpha: f64, n: usize, opts: &SeriesOptions) -> (Vec<f64>, usize, usize) {
    let zeta = model.zeta().expect("checked by caller");
    let measure = model.measure();
    let mu = measure.mean();
    let rho = mu / zeta;
    let h = opts.x_max / n as f64;
    let points = n + 1;
    let conv = Convolver::new(points);

    let f: Vec<f64> = (0..points)
        .map(|i| {
            let x = i as f64 * h;
            if i == 0 {
                measure.tail(0.0) / mu
            } else {
                measure.tail(x) / mu
            }
        })
        .collect();
    let f_hat = conv.spectrum(&f);

    let mut w = vec![1.0 / zeta; points];
    let mut density = f.clone();
    let mut weight = rho;
    let mut terms_w = 1;
    loop {
        let cdf = cumulative_trapezoid(&density, h);
        let term_sup = weight * sup(&cdf) / zeta;
        for (wi, ci) in w.iter_mut().zip(&cdf) {
            *wi += weight * ci / zeta;
        }
        terms_w += 1;
        if term_sup < opts.term_tol || terms_w > 10_000 {
            break;
        }
        density = conv.trapezoid(&f, &f_hat, &density, h);
        weight *= rho;
    }

    if alpha == 0.0 {
        return (w, terms_w, 0);
    }
    let w_hat = conv.spectrum(&w);
    let mut acc = w.clone();
    let mut term = w.clone();
    let mut power = 1.0;
    let mut terms_alpha = 1;
    loop {
        term = conv.trapezoid(&w, &w_hat, &term, h);
        power *= alpha;
        let term_sup = power * sup(&term);
        for (a, t) in acc.iter_mut().zip(&term) {
            *a += power * t;
        }
        terms_alpha += 1;
        if term_sup < opts.term_tol * sup(&acc).max(1.0) || terms_alpha > 10_000 {
            break;
        }
    }
    (acc, terms_w, terms_alpha)
}

impl ScaleGrid {
    pub fn build(model: &LevyModel, alpha: f64, opts: &SeriesOptions) -> Result<Self> {
        let zeta = model.zeta().ok_or_else(|| {
            DamError::Unsupported("the convolution series needs a bounded variation input".into())
        })?;
        let mu = model.measure().mean();
        let rho = mu / zeta;
        if !(rho < 1.0) {
            return Err(DamError::Unsupported(format!(
                "the convolution series needs rho = mu/zeta < 1, got {rho}"
            )));
        }
        if !(mu > 0.0) || !model.measure().tail(0.0).is_finite() {
            return Err(DamError::Unsupported(
                "the convolution series needs a finite, nonzero Lévy measure".into(),
            ));
        }
        if !(opts.x_max > 0.0) {
            return Err(DamError::Domain("series grid needs x_max > 0".into()));
        }

        let mut n = ((1.0 / opts.step_fraction).ceil() as usize).max(16);
        let (mut coarse, _, _) = series_table(model, alpha, n, opts);
        let mut previous: Option<Vec<f64>> = None;
        loop {
            if 2 * n + 1 > opts.max_points {
                return Err(DamError::Convergence(format!(
                    "series grid did not settle to {} within {} points",
                    opts.refine_tol, opts.max_points
                )));
            }
            let (fine, terms_w, terms_alpha) = series_table(model, alpha, 2 * n, opts);
            let extrapolated: Vec<f64> = (0..=n).map(|i| (4.0 * fine[2 * i] - coarse[i]) / 3.0).collect();
            if let Some(prev) = &previous {
                let scale = sup(&extrapolated).max(1.0);
                let diff = prev
                    .iter()
                    .enumerate()
                    .fold(0.0f64, |m, (i, p)| m.max((extrapolated[2 * i] - p).abs()));
                if diff < opts.refine_tol * scale {
                    let step = opts.x_max / n as f64;
                    return Ok(Self::from_values(extrapolated, step, terms_w, terms_alpha));
                }
            }
            previous = Some(extrapolated);
            coarse = fine;
            n *= 2;
        }
    }

    fn from_values(w: Vec<f64>, step: f64, terms_w: usize, terms_alpha: usize) -> Self {
        let n = w.len() - 1;
        let mut w_prime = vec![0.0; n + 1];
        for i in 0..=n {
            w_prime[i] = if i >= 2 && i + 2 <= n {
                (-w[i + 2] + 8.0 * w[i + 1] - 8.0 * w[i - 1] + w[i - 2]) / (12.0 * step)
            } else if i < 2 {
                let f = &w[i..i + 5];
                if i == 0 {
                    (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * step)
                } else {
                    let f = &w[0..5];
                    (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * step)
                }
            } else {
                let f = &w[n - 4..=n];
                if i == n {
                    (25.0 * f[4] - 48.0 * f[3] + 36.0 * f[2] - 16.0 * f[1] + 3.0 * f[0]) / (12.0 * step)
                } else {
                    (3.0 * f[4] + 10.0 * f[3] - 18.0 * f[2] + 6.0 * f[1] - f[0]) / (12.0 * step)
                }
            };
        }
        let mut w_bar = vec![0.0; n + 1];
        for i in 0..n {
            let piece = if i == 0 {
                step * (9.0 * w[0] + 19.0 * w[1] - 5.0 * w[2] + w[3]) / 24.0
            } else if i + 1 == n {
                step * (w[n - 3] - 5.0 * w[n - 2] + 19.0 * w[n - 1] + 9.0 * w[n]) / 24.0
            } else {
                step * (-w[i - 1] + 13.0 * w[i] + 13.0 * w[i + 1] - w[i + 2]) / 24.0
            };
            w_bar[i + 1] = w_bar[i] + piece;
        }
        Self {
            step,
            w,
            w_prime,
            w_bar,
            terms_w,
            terms_alpha,
        }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn x_max(&self) -> f64 {
        self.step * (self.w.len() - 1) as f64
    }

    pub fn nodes(&self) -> usize {
        self.w.len()
    }

    fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        let n = values.len() - 1;
        assert!(
            x <= self.x_max() * (1.0 + 1e-12),
            "x = {x} lies beyond the tabulated range [0, {}]",
            self.x_max()
        );
        let u = (x / self.step).max(0.0);
        let i = (u.floor() as usize).min(n - 1);
        let j0 = i.saturating_sub(1).min(n - 3);
        let mut acc = 0.0;
        for a in 0..4 {
            let mut basis = 1.0;
            for b in 0..4 {
                if a != b {
                    basis *= (u - (j0 + b) as f64) / (a as f64 - b as f64);
                }
            }
            acc += basis * values[j0 + a];
        }
        acc
    }

    pub fn w(&self, x: f64) -> f64 {
        self.interpolate(&self.w, x)
    }

    pub fn w_prime(&self, x: f64) -> f64 {
        self.interpolate(&self.w_prime, x)
    }

    pub fn w_bar(&self, x: f64) -> f64 {
        // integrate the local cubic from the last node
        let u = (x / self.step).max(0.0);
        let n = self.w.len() - 1;
        let i = (u.floor() as usize).min(n - 1);
        let base = self.w_bar[i];
        let frac = x - i as f64 * self.step;
        if frac <= 0.0 {
            return base;
        }
        // three-point Gauss–Legendre is exact for the cubic interpolant
        let nodes = [-(0.6f64).sqrt(), 0.0, (0.6f64).sqrt()];
        let weights = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
        let x0 = i as f64 * self.step;
        let half = 0.5 * frac;
        base + nodes
            .iter()
            .zip(weights)
            .map(|(t, wt)| wt * half * self.w(x0 + half * (1.0 + t)))
            .sum::<f64>()
    }
}
