//! Regenerative Monte Carlo against the analytic costs, then the same
//! check through the `verify` command.

use levy_dam::config::RunConfig;
use levy_dam::mc::{self, PathConfig};
use levy_dam::report;
use levy_dam::{CostSpec, DamProblem, FillMode, JumpDistribution, LevyModel, PiecewisePolynomial, PolicyParams};

fn main() -> levy_dam::Result<()> {
    let costs = CostSpec::new(1.0, 0.5, 0.3, PiecewisePolynomial::constant(1.0), PiecewisePolynomial::constant(0.4))?;
    let model = LevyModel::compound_poisson(1.0, 1.5, JumpDistribution::Exponential { rate: 1.0 })?;
    let problem = DamProblem::new(model, PolicyParams::new(2.0, 0.5, 2.0, 4.0)?, costs, FillMode::Plain)?;

    let cfg = PathConfig {
        n_paths: 10_000,
        seed: 3,
        ..PathConfig::default()
    };
    let paths = mc::run_policy_cycles(&problem, 0.0, problem.policy.tau, &cfg)?;
    let cycles = mc::complete_cycles(&paths);
    let rewards: Vec<f64> = cycles.iter().map(|c| c.undiscounted_cost).collect();
    let lengths: Vec<f64> = cycles.iter().map(|c| c.length()).collect();
    let est = mc::estimate_ratio("long_run_average", &rewards, &lengths)?;
    let exact = problem.long_run_average_cost()?;
    println!(
        "long-run average: analytic {exact:.6}, MC {:.6} ± {:.6} (z = {:.2})",
        est.mean,
        est.std_error,
        est.z_score(exact)
    );

    let cfg = RunConfig::from_toml(include_str!("../../../configs/compound_poisson.toml"))?;
    let r = report::cmd_verify(&cfg)?;
    for c in &r.checks {
        println!("{:?} {:<24} alpha={:<4} z={:.2}", c.status, c.quantity, c.alpha, c.z_score.unwrap_or(f64::NAN));
    }
    println!("all passed: {}", r.passed);
    Ok(())
}
