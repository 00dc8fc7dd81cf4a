use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use levy_dam::config::RunConfig;
use levy_dam::report::{self, CheckStatus};
use levy_dam::DamError;

/// Cost functionals, Monte Carlo verification and (λ, τ) optimisation for
/// Lévy-driven dams.
#[derive(Parser)]
#[command(name = "levy-dam", version)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Compute every analytic quantity of the configured policy.
    Evaluate(Args),
    /// Compare analytic values with the Monte Carlo oracle.
    Verify(Args),
    /// Sweep (λ, τ) and report the minimiser.
    Optimize(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `verify.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `verify.n_paths`.
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    quiet: bool,
}

fn exit_code(e: &DamError) -> u8 {
    match e {
        DamError::Config(_)
        | DamError::Io(_)
        | DamError::Domain(_)
        | DamError::InvalidModel(_)
        | DamError::InvalidPolicy(_)
        | DamError::InvalidCost(_) => 1,
        _ => 3,
    }
}

fn load(args: &Args) -> levy_dam::Result<RunConfig> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(dir) = &args.out {
        cfg.output.dir = dir.clone();
    }
    if args.seed.is_some() || args.paths.is_some() {
        let v = cfg.verify.get_or_insert_with(Default::default);
        v.seed = args.seed.unwrap_or(v.seed);
        v.n_paths = args.paths.unwrap_or(v.n_paths);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(verb: &Verb) -> levy_dam::Result<bool> {
    let (Verb::Evaluate(args) | Verb::Verify(args) | Verb::Optimize(args)) = verb;
    let cfg = load(args)?;
    let dir = &cfg.output.dir;
    let say = |s: String| {
        if !args.quiet {
            println!("{s}");
        }
    };
    let (written, ok) = match verb {
        Verb::Evaluate(_) => {
            let r = report::cmd_evaluate(&cfg)?;
            for q in &r.quantities {
                let v = q.value.map_or_else(|| "n/a".to_string(), |v| format!("{v:.10}"));
                say(format!("{:<24} alpha={:<6} {v}", q.quantity, q.alpha));
            }
            (r.write(dir)?, true)
        }
        Verb::Verify(_) => {
            let r = report::cmd_verify(&cfg)?;
            for c in &r.checks {
                let z = c.z_score.map_or_else(|| "-".to_string(), |z| format!("{z:.2}"));
                let status = match c.status {
                    CheckStatus::Pass => "PASS",
                    CheckStatus::Fail => "FAIL",
                    CheckStatus::Starved => "STARVED",
                };
                say(format!("{status:<8} {:<24} alpha={:<6} z={z}", c.quantity, c.alpha));
            }
            (r.write(dir)?, r.passed)
        }
        Verb::Optimize(_) => {
            let r = report::cmd_optimize(&cfg)?;
            let a = &r.argmin;
            say(format!(
                "argmin lambda={} tau={} objective={} ({} points)",
                a.lambda,
                a.tau,
                a.objective.unwrap_or(f64::NAN),
                r.points.len()
            ));
            (r.write(dir)?, true)
        }
    };
    for p in written {
        say(format!("wrote {}", p.display()));
    }
    Ok(ok)
}

fn main() -> ExitCode {
    // usage errors count as config errors; clap's own code 2 means something else here
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli.verb) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("levy-dam: verification failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("levy-dam: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
