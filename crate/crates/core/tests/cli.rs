use std::fs;
use std::path::Path;
use std::process::Command;

use levy_dam::config::RunConfig;
use levy_dam::report::{self, CheckStatus};

const CP: &str = r#"
schema_version = 1
alphas = [0.5]

[model]
kind = "compound_poisson"
zeta = 1.0
rate = 1.5
jumps = { kind = "exponential", rate = 1.0 }

[policy]
lambda = 2.0
tau = 0.5
release_rate = 2.0
capacity = 4.0
fill = "plain"

[costs]
k1 = 1.0
k2 = 0.5
r = 0.3
g = { breaks = [0.0, 1.0], pieces = [[1.0], [1.0, 0.5], [1.5]] }
g_star = { breaks = [2.0], pieces = [[0.2, 0.1], [0.4]] }

[verify]
n_paths = 4000
seed = 5
"#;

const WIENER: &str = r#"
schema_version = 1
alphas = [0.5, 1.0]

[model]
kind = "brownian"
mu = 0.8
sigma2 = 1.0

[policy]
lambda = 2.0
tau = 0.0
release_rate = 2.0
fill = "plain"
"#;

fn bin(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_levy-dam"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn with_config(text: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), text).unwrap();
    dir
}

#[test]
fn evaluate_is_byte_identical_across_runs() {
    let dir = with_config(CP);
    for out in ["a", "b"] {
        let o = bin(&["evaluate", "--config", "run.toml", "--out", out, "--quiet"], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty());
    }
    for f in ["evaluate.csv", "evaluate.json"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn verify_is_reproducible_and_passes() {
    let dir = with_config(CP);
    for out in ["a", "b"] {
        let o = bin(&["verify", "--config", "run.toml", "--out", out, "--quiet"], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = fs::read_to_string(dir.path().join("a/verify.csv")).unwrap();
    assert_eq!(a, fs::read_to_string(dir.path().join("b/verify.csv")).unwrap());
    assert!(a.lines().count() > 8);
    assert!(a.lines().skip(1).all(|l| l.ends_with(",pass")), "{a}");
}

#[test]
fn wiener_report_contains_exit_mean() {
    let cfg = RunConfig::from_toml(WIENER).unwrap();
    let r = report::cmd_evaluate(&cfg).unwrap();
    let mean = r.get("fill_exit_mean", 0.0).unwrap();
    assert!((mean - 2.0 / 0.8).abs() < 1e-12, "{mean}");
    // no capacity: the release phase exists but cycle costs do not
    assert!(r.get("release_exit_mean", 0.0).is_some());
    let q = r.quantities.iter().find(|q| q.quantity == "total_discounted_cost").unwrap();
    assert!(q.value.is_none() && q.note.as_deref().unwrap().contains("capacity"));
}

#[test]
fn zero_costs_give_zero_cost_fields() {
    let text = CP.replace("k1 = 1.0\nk2 = 0.5\nr = 0.3\n", "").replace("g = {", "# g = {").replace("g_star = {", "# g_star = {");
    let cfg = RunConfig::from_toml(&text).unwrap();
    let r = report::cmd_evaluate(&cfg).unwrap();
    let costs: Vec<_> = r.quantities.iter().filter(|q| q.quantity.contains("cost")).collect();
    assert!(costs.len() >= 8);
    for q in costs {
        assert_eq!(q.value, Some(0.0), "{}", q.quantity);
    }
}

#[test]
fn corrupted_analytic_value_fails() {
    let cfg = RunConfig::from_toml(CP).unwrap();
    let r = report::cmd_verify_with(&cfg, &|q, _, v| if q == "cycle_cost" { v * 1.05 } else { v }).unwrap();
    assert!(!r.passed);
    let bad: Vec<_> = r.failures().map(|c| c.quantity.as_str()).collect();
    assert_eq!(bad, ["cycle_cost"]);
}

#[test]
fn exit_codes() {
    // a tolerance of 1e-9 standard errors cannot be met
    let dir = with_config(&CP.replace("seed = 5", "seed = 5\ntolerance_se = 1e-9"));
    let o = bin(&["verify", "--config", "run.toml", "--out", "o", "--quiet", "--paths", "500"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let dir = with_config(&CP.replace("rate = 1.5", "rate = 1.5\nrait = 2.0"));
    let o = bin(&["evaluate", "--config", "run.toml"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line") && err.contains("rait"), "{err}");

    let o = bin(&["evaluate", "--config", "nowhere.toml"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = bin(&["evaluate"], dir.path());
    assert_eq!(o.status.code(), Some(1));

    // without a capacity the cost functionals, hence the objective, are undefined
    let dir = with_config(&format!(
        "{}\n[optimize]\nlambda = {{ min = 1.0, max = 2.0, steps = 2 }}\ntau = {{ min = 0.0, max = 0.5, steps = 2 }}\nobjective = \"long_run_average\"\n",
        CP.replace("capacity = 4.0", "")
    ));
    let o = bin(&["optimize", "--config", "run.toml", "--out", "o"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn starvation_is_reported_distinctly() {
    let text = CP.replace("seed = 5", "seed = 5\nhorizon = 0.5");
    let cfg = RunConfig::from_toml(&text).unwrap();
    let r = report::cmd_verify(&cfg).unwrap();
    assert!(!r.passed);
    assert!(r.checks.iter().any(|c| c.status == CheckStatus::Starved && c.quantity == "fill_exit_mean"));
    assert!(r.checks.iter().all(|c| c.status != CheckStatus::Fail));
}

#[test]
fn verify_outcome_is_stable_across_seeds() {
    for seed in [11, 12, 13] {
        let text = CP.replace("seed = 5", &format!("seed = {seed}"));
        let r = report::cmd_verify(&RunConfig::from_toml(&text).unwrap()).unwrap();
        assert!(r.passed, "seed {seed}: {:?}", r.failures().collect::<Vec<_>>());
    }
}

fn sweep(lambda: (f64, f64, usize), tau: (f64, f64, usize), rounds: usize, costs: bool) -> String {
    let base = if costs {
        CP.to_string()
    } else {
        CP.replace("k1 = 1.0\nk2 = 0.5\nr = 0.3\n", "").replace("g = {", "# g = {").replace("g_star = {", "# g_star = {")
    };
    format!(
        "{base}\n[optimize]\nlambda = {{ min = {}, max = {}, steps = {} }}\ntau = {{ min = {}, max = {}, steps = {} }}\nobjective = \"long_run_average\"\nrefine_rounds = {rounds}\n",
        lambda.0, lambda.1, lambda.2, tau.0, tau.1, tau.2
    )
}

#[test]
fn constant_objective_takes_first_point() {
    let cfg = RunConfig::from_toml(&sweep((1.0, 3.0, 3), (0.0, 1.0, 3), 2, false)).unwrap();
    let r = report::cmd_optimize(&cfg).unwrap();
    assert!(r.points.iter().all(|p| p.objective == Some(0.0)));
    assert_eq!((r.argmin.lambda, r.argmin.tau), (1.0, 0.0));
}

#[test]
fn single_point_grid() {
    let cfg = RunConfig::from_toml(&sweep((2.5, 2.5, 1), (0.7, 0.7, 1), 2, true)).unwrap();
    let r = report::cmd_optimize(&cfg).unwrap();
    assert_eq!(r.points.len(), 1);
    assert_eq!((r.argmin.lambda, r.argmin.tau), (2.5, 0.7));
}

#[test]
fn infeasible_grid_is_rejected() {
    let dir = with_config(&sweep((0.5, 1.0, 2), (1.0, 2.0, 2), 0, true));
    let o = bin(&["optimize", "--config", "run.toml", "--out", "o"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no grid point"));
}

#[test]
fn argmin_is_stable_under_refinement() {
    let coarse = report::cmd_optimize(&RunConfig::from_toml(&sweep((1.0, 3.5, 6), (0.0, 0.9, 4), 0, true)).unwrap()).unwrap();
    let fine = report::cmd_optimize(&RunConfig::from_toml(&sweep((1.0, 3.5, 11), (0.0, 0.9, 7), 0, true)).unwrap()).unwrap();
    let (dl, dt) = (0.5, 0.3);
    assert!((coarse.argmin.lambda - fine.argmin.lambda).abs() <= dl + 1e-12, "{:?} {:?}", coarse.argmin, fine.argmin);
    assert!((coarse.argmin.tau - fine.argmin.tau).abs() <= dt + 1e-12);
    // the argmin is the table minimum
    let min = fine.points.iter().filter_map(|p| p.objective).fold(f64::INFINITY, f64::min);
    assert_eq!(fine.argmin.objective, Some(min));
}

#[test]
fn refinement_adds_points_around_the_incumbent() {
    let cfg = RunConfig::from_toml(&sweep((1.0, 3.0, 3), (0.0, 1.0, 3), 2, true)).unwrap();
    let r = report::cmd_optimize(&cfg).unwrap();
    assert!(r.points.iter().any(|p| p.round == 2));
    assert!(r.points.len() > 9);
    let dir = tempfile::tempdir().unwrap();
    r.write(dir.path()).unwrap();
    let table = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), r.points.len() + 1);
    assert!(table.starts_with("lambda,tau,round,objective"));
    assert!(dir.path().join("optimize.json").exists());
}
