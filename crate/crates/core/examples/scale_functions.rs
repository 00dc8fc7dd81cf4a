//! W, Z and W̄ by closed form, convolution series and Laplace inversion.

use levy_dam::{JumpDistribution, LevyModel, ScaleFunctionSet, ScaleMethod, ScaleOptions};

fn main() -> levy_dam::Result<()> {
    let alpha = 0.5;
    let bm = LevyModel::brownian(1.0, 2.0)?;
    let closed = ScaleFunctionSet::new(&bm, alpha)?;
    let inverted = ScaleFunctionSet::with_method(&bm, alpha, ScaleMethod::LaplaceInversion, ScaleOptions::default())?;
    println!("Brownian, alpha = {alpha}, eta = {:.6}", closed.eta());
    println!("{:>6} {:>16} {:>16} {:>12}", "x", "W closed", "W inverted", "Z");
    for x in [0.1, 0.5, 1.0, 2.0, 5.0] {
        println!("{x:>6} {:>16.10} {:>16.10} {:>12.6}", closed.w(x), inverted.w(x), closed.z(x));
    }

    // the series needs ρ = E[jumps per unit time]/ζ < 1
    let cp = LevyModel::compound_poisson(2.0, 1.5, JumpDistribution::Exponential { rate: 1.0 })?;
    let series = ScaleFunctionSet::with_method(&cp, alpha, ScaleMethod::ConvolutionSeries, ScaleOptions::default())?;
    let talbot = ScaleFunctionSet::new(&cp, alpha)?;
    println!("\ncompound Poisson, rho = {:.2}, W(0) = 1/zeta = {}", cp.rho().unwrap_or(f64::NAN), talbot.w_at_zero());
    println!("{:>6} {:>16} {:>16} {:>14}", "x", "W series", "W inverted", "W' inverted");
    for x in [0.1, 0.5, 1.0, 2.0, 5.0] {
        println!("{x:>6} {:>16.10} {:>16.10} {:>14.8}", series.w(x), talbot.w(x), talbot.w_plus_prime(x));
    }
    Ok(())
}
