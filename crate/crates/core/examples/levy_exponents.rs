//! Laplace exponents, mean input and the root `η(α)` for each input family.

use levy_dam::{JumpDistribution, LevyModel};

fn main() -> levy_dam::Result<()> {
    let models = [
        ("brownian", LevyModel::brownian(0.8, 1.5)?),
        (
            "compound poisson",
            LevyModel::compound_poisson(1.0, 1.5, JumpDistribution::Exponential { rate: 1.0 })?,
        ),
        ("gamma", LevyModel::gamma(2.0, 1.5, 2.0)?),
        ("inverse gaussian", LevyModel::inverse_gaussian(1.5, 1.0, 1.2)?),
    ];
    println!("{:<18} {:>10} {:>10} {:>10} {:>10}", "model", "E I_1", "phi(1)", "eta(0)", "eta(0.5)");
    for (name, m) in &models {
        println!(
            "{name:<18} {:>10.5} {:>10.5} {:>10.5} {:>10.5}",
            m.mean_input(),
            m.phi(1.0)?,
            m.eta(0.0)?,
            m.eta(0.5)?
        );
    }
    // releasing at rate M shifts the exponent by Mθ
    let m = &models[1].1;
    let released = m.shifted(2.0)?;
    println!("\nI - 2t: E = {:.3}, phi(1) = {:.5}", released.mean_input(), released.phi(1.0)?);
    Ok(())
}
