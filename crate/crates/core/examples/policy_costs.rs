//! Discounted and long-run average costs of a P^M_{λ,τ} policy.

use levy_dam::{CostSpec, DamProblem, FillMode, LevyModel, PiecewisePolynomial, PolicyParams};

fn main() -> levy_dam::Result<()> {
    let costs = CostSpec::new(
        1.0,
        0.5,
        0.3,
        PiecewisePolynomial::new(vec![0.0, 1.0], vec![vec![1.0], vec![1.0, 0.5], vec![1.5]])?,
        PiecewisePolynomial::new(vec![2.0], vec![vec![0.2, 0.1], vec![0.4]])?,
    )?;
    let problem = DamProblem::new(
        LevyModel::brownian(1.0, 2.0)?,
        PolicyParams::new(1.5, 0.5, 2.0, 3.0)?,
        costs,
        FillMode::Reflected,
    )?;
    let tau = problem.policy.tau;
    for alpha in [0.1, 0.5, 1.0] {
        println!(
            "alpha {alpha:>4}: cycle cost {:.6}, cycle LT {:.6}, total {:.6}",
            problem.cycle_cost(alpha, tau)?,
            problem.cycle_end_lt(alpha, tau)?,
            problem.total_discounted_cost(alpha, tau)?
        );
    }
    let (num, den) = problem.renewal_reward()?;
    println!("mean cycle cost {num:.6}, mean cycle length {den:.6}");
    println!("long-run average {:.8}", num / den);
    for alpha in [1e-2, 1e-3, 1e-4] {
        println!("alpha * C_alpha at {alpha:e}: {:.8}", problem.scaled_discounted_cost(alpha)?);
    }
    Ok(())
}
