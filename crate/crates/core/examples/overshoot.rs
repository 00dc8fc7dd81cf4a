//! Law of the content at the first passage above λ, analytic and simulated.

use levy_dam::exit;
use levy_dam::mc::{self, PathConfig};
use levy_dam::{FillMode, JumpDistribution, LevyModel, PiecewisePolynomial, ScaleFunctionSet};

fn main() -> levy_dam::Result<()> {
    let model = LevyModel::compound_poisson(1.0, 1.5, JumpDistribution::Exponential { rate: 1.0 })?;
    let lambda = 2.0;
    let s = ScaleFunctionSet::new(&model, 0.0)?;
    let law = exit::overshoot_up(&s, 0.0, lambda)?;
    println!("total mass {:.10}, creeping {:.3e}", law.total_mass(), law.atom_at_lambda());
    println!("mean overshoot {:.8}", law.expect(|z| z - lambda) / law.total_mass());

    let cfg = PathConfig {
        n_paths: 50_000,
        seed: 1,
        ..PathConfig::default()
    };
    let ph = mc::sample_fill_phase(&model, FillMode::Plain, 0.0, lambda, &PiecewisePolynomial::zero(), 0.0, &cfg)?;
    let over: Vec<f64> = ph.iter().filter(|p| p.completed).map(|p| p.position - lambda).collect();
    println!("{:>6} {:>12} {:>12}", "u", "analytic", "empirical");
    for u in [0.25, 0.5, 1.0, 2.0] {
        let emp = over.iter().filter(|&&o| o <= u).count() as f64 / over.len() as f64;
        println!("{u:>6} {:>12.6} {:>12.6}", law.mass_below(lambda + u) / law.total_mass(), emp);
    }
    let d = mc::ks_statistic(&over, |u| 1.0 - (-u).exp());
    println!("KS vs Exp(1): D = {d:.5}, 1% critical {:.5}", mc::ks_critical_1pct(over.len()));
    Ok(())
}
