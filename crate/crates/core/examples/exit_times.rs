//! One- and two-sided exit problems: transforms, means and the busy period.

use levy_dam::exit;
use levy_dam::{shifted_model, JumpDistribution, LevyModel, ScaleFunctionSet};

fn main() -> levy_dam::Result<()> {
    // Wiener process with drift: E_x[T_λ⁺] = (λ − x)/μ
    let (mu, lambda) = (0.8, 2.0);
    let s = ScaleFunctionSet::new(&LevyModel::brownian(mu, 1.0)?, 0.0)?;
    for x in [0.0, 1.0, 1.5] {
        println!("E_{x}[T_up] = {:.10}  (closed {:.10})", exit::exit_mean_up(&s, x, lambda)?, (lambda - x) / mu);
    }

    // reflected at zero, no drift: E_0[τ_λ] = λ²/σ²
    let s = ScaleFunctionSet::new(&LevyModel::brownian(0.0, 1.5)?, 0.0)?;
    println!("reflected E_0[tau] = {:.10}  (closed {:.10})", exit::exit_mean_reflected(&s, 0.0, 1.2)?, 1.44 / 1.5);

    // discounted two-sided exit
    let cp = LevyModel::compound_poisson(1.0, 1.5, JumpDistribution::Exponential { rate: 1.0 })?;
    let s = ScaleFunctionSet::new(&cp, 0.5)?;
    let u = exit::potential_two_sided(&s, -1.0, 2.0)?;
    println!("E_0[e^(-aT); exit (-1, 2)] = {:.8}", u.exit_transform(0.0)?);
    println!("E_0[int_0^T e^(-at) dt]     = {:.8}", u.discounted_duration(0.0)?);

    // release phase with a large capacity approaches the M/G/1 busy period
    let (m, x, tau) = (2.0, 2.0, 0.5);
    let s_m = ScaleFunctionSet::new(&shifted_model(&cp, m)?, 0.0)?;
    for v in [5.0, 10.0, 20.0, 40.0, f64::INFINITY] {
        println!("V = {v:>4}: E_x[T_release] = {:.8}", exit::release_exit_mean(&s_m, x, tau, v)?);
    }
    println!("busy period (x - tau)/(M - E I_1) = {:.8}", (x - tau) / (m - cp.mean_input()));
    Ok(())
}
