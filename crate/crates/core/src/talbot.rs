//! Fixed-Talbot numerical inversion of Laplace transforms.
//!
//! The contour `s(θ) = c + rθ(cot θ + i)`, `θ ∈ (-π, π)`, `r = 2M/(5t)` is
//! traversed with the trapezoid rule on `M` nodes. A shift `c` moves the
//! contour to the right of every singularity of the transform, so the
//! inverse of a function growing like `e^{ct}` keeps its relative accuracy.

use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct Talbot {
    nodes: usize,
    // (θ, cot θ, σ(θ)) for k = 1..M-1
    table: Vec<(f64, f64, f64)>,
}

/// Node count used when none is given; see [`Talbot::new`].
pub const DEFAULT_TALBOT_NODES: usize = 24;

impl Default for Talbot {
    fn default() -> Self {
        Self::new(DEFAULT_TALBOT_NODES)
    }
}

impl Talbot {
    /// In double precision the round-off of the contour sum grows like
    /// `ε·e^{0.4 M}` while the discretisation error falls like
    /// `10^{-0.6 M}`, so useful node counts sit between 16 and 32.
    pub fn new(nodes: usize) -> Self {
        let nodes = nodes.max(4);
        let m = nodes as f64;
        let table = (1..nodes)
            .map(|k| {
                let theta = k as f64 * std::f64::consts::PI / m;
                let cot = theta.cos() / theta.sin();
                let sigma = theta + (theta * cot - 1.0) * cot;
                (theta, cot, sigma)
            })
            .collect();
        Self { nodes, table }
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// Evaluates the inverse transform of `transform` at `t > 0`, with the
    /// contour shifted right by `shift`.
    pub fn invert<F>(&self, transform: F, t: f64, shift: f64) -> f64
    where
        F: Fn(Complex64) -> Complex64,
    {
        debug_assert!(t > 0.0);
        let m = self.nodes as f64;
        let r = 2.0 * m / (5.0 * t);
        let mut acc = 0.5 * (transform(Complex64::new(shift + r, 0.0)) * (r * t).exp()).re;
        for &(theta, cot, sigma) in &self.table {
            let s = Complex64::new(r * theta * cot, r * theta);
            let term = (s * t).exp() * transform(s + shift) * Complex64::new(1.0, sigma);
            acc += term.re;
        }
        (shift * t).exp() * r / m * acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverts_elementary_transforms() {
        let talbot = Talbot::default();
        for &t in &[0.01, 0.5, 1.0, 3.0, 10.0] {
            let exp = talbot.invert(|s| 1.0 / (s + 2.0), t, 0.0);
            assert!((exp - (-2.0 * t).exp()).abs() < 1e-11, "t={t} {exp}");
            let ramp = talbot.invert(|s| 1.0 / (s * s), t, 0.0);
            assert!((ramp / t - 1.0).abs() < 1e-11);
        }
    }

    #[test]
    fn shifted_contour_keeps_relative_accuracy_for_growth() {
        let talbot = Talbot::default();
        for &t in &[0.01, 1.0, 10.0, 30.0] {
            let grow = talbot.invert(|s| 1.0 / (s - 3.0), t, 3.0);
            let exact = (3.0 * t).exp();
            assert!((grow / exact - 1.0).abs() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn sine_transform() {
        let talbot = Talbot::default();
        let v = talbot.invert(|s| 1.0 / (s * s + 1.0), 2.0, 0.0);
        assert!((v - 2.0f64.sin()).abs() < 1e-10);
    }
}
