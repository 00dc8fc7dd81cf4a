//! Grid search over (λ, τ) with two refinement rounds.

use levy_dam::config::RunConfig;
use levy_dam::report;

fn main() -> levy_dam::Result<()> {
    let cfg = RunConfig::from_toml(include_str!("../../../configs/compound_poisson.toml"))?;
    let sweep = report::cmd_optimize(&cfg)?;
    println!("{:>8} {:>8} {:>5} {:>12}", "lambda", "tau", "round", "objective");
    for p in &sweep.points {
        println!("{:>8.4} {:>8.4} {:>5} {:>12.6}", p.lambda, p.tau, p.round, p.objective.unwrap_or(f64::NAN));
    }
    let best = &sweep.argmin;
    println!("argmin: lambda = {}, tau = {}, objective = {:?}", best.lambda, best.tau, best.objective);
    Ok(())
}
