use std::path::PathBuf;
use std::process::Command;

use hsdm::cli::{self, CertMode, Suite, VerifyOptions};
use hsdm::gfun::GFunction;
use hsdm::rates::CertStatus;
use hsdm::spec::{Problem, ProblemSpec, SpecError};

fn problem_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../problems").join(name)
}

fn run(args: &[&str]) -> i32 {
    cli::run(std::iter::once("hsdm").chain(args.iter().copied()))
}

const OVERFLOW: &str = r#"{
  "label": "overflow",
  "dimension": 1,
  "operators": {
    "id": { "op": { "kind": "identity" }, "class": "nonexpansive" },
    "g": { "op": { "kind": "affine_map", "matrix": [[0.5]], "shift": [1.5e308] }, "class": { "contraction": { "tau": 0.5 } } }
  },
  "t": "id",
  "contraction": { "operator": { "name": "g" } },
  "schedule": { "kind": "power", "rho": 1.0 },
  "witness": [0.0],
  "start": [0.0],
  "d": 1
}"#;

// Starts far outside the confinement radius; the rotation decays slowly.
const FAR_ROTATION: &str = r#"{
  "label": "far-rotation",
  "dimension": 2,
  "operators": {
    "rot": { "op": { "kind": "affine_map", "matrix": [[0.0, -1.0], [1.0, 0.0]], "shift": [0.0, 0.0] }, "class": "nonexpansive" },
    "g": { "op": { "kind": "affine_map", "matrix": [[0.5, 0.0], [0.0, 0.5]], "shift": [0.0, 0.0] }, "class": { "contraction": { "tau": 0.5 } } }
  },
  "t": "rot",
  "contraction": { "operator": { "name": "g" } },
  "schedule": { "kind": "power", "rho": 1.0 },
  "witness": [0.0, 0.0],
  "g_fixed_point": [0.0, 0.0],
  "start": [1000000.0, 0.0],
  "d": 1
}"#;

fn write_tmp(dir: &tempfile::TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn shipped_problems_load_and_round_trip() {
    for name in ["quadratic_ball.json", "two_projection.json", "toy_tower.json", "harmonic_steps.json"] {
        let spec = ProblemSpec::load(problem_file(name)).unwrap();
        let again = ProblemSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(spec, again, "{name}");
        spec.validate().unwrap();
    }
    let fam = Problem::load(problem_file("two_projection.json")).unwrap();
    assert!(fam.family);
    assert_eq!(fam.n_family(), 2);
    assert_eq!(fam.tau, 0.5);
    let single = Problem::load(problem_file("quadratic_ball.json")).unwrap();
    assert!(single.single_instance().is_some());
    assert!(single.tau.abs() < 1e-12);
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(matches!(ProblemSpec::load(problem_file("bad_step.json")).unwrap().validate(), Err(SpecError::Hilbert(_)) | Err(SpecError::Invalid(_))));
    let src = std::fs::read_to_string(problem_file("quadratic_ball.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&src).unwrap();
    v["surprise"] = serde_json::json!(1);
    assert!(matches!(ProblemSpec::from_json(&v.to_string()), Err(SpecError::Parse(_))));
    let mut v: serde_json::Value = serde_json::from_str(&src).unwrap();
    v["t"] = serde_json::json!("missing");
    assert!(Problem::from_json(&v.to_string()).is_err());
    let mut v: serde_json::Value = serde_json::from_str(&src).unwrap();
    v["start"] = serde_json::json!([0.0, 0.0, 0.0]);
    assert!(Problem::from_json(&v.to_string()).is_err());
    let mut v: serde_json::Value = serde_json::from_str(&src).unwrap();
    v["family"] = serde_json::json!(["ball"]);
    assert!(Problem::from_json(&v.to_string()).is_err());
    assert!(matches!(ProblemSpec::load("/nonexistent/spec.json"), Err(SpecError::Io { .. })));
}

#[test]
fn solve_converges_and_reports() {
    let p = Problem::load(problem_file("quadratic_ball.json")).unwrap();
    let (traj, sum) = cli::solve(&p, None, 2000).unwrap();
    assert_eq!(traj.len(), 2001);
    assert!(sum.distance_to_solution.unwrap() < 1e-6);
    assert!(sum.fixed_point_residuals[0] < 1e-12);
    let (zero, _) = cli::solve(&p, Some("viscosity"), 0).unwrap();
    assert_eq!(zero.points, vec![p.spec.start.clone()]);
    assert!(cli::solve(&p, Some("bogus"), 1).is_err());
}

#[test]
fn certificates_from_the_library_entry_point() {
    let g: GFunction = "n+1".parse().unwrap();
    let toy = Problem::load(problem_file("toy_tower.json")).unwrap();
    let c = cli::certify(&toy, 0.5, &g, CertMode::Single).unwrap();
    assert_eq!(c.quantities["k"], (1u64 << 60).to_string());
    let fam = Problem::load(problem_file("two_projection.json")).unwrap();
    let a = cli::certify(&fam, 0.5, &g, CertMode::Asy).unwrap();
    assert_eq!(a.status, CertStatus::VerifiedEmpirically);
    assert!(a.consistent());
    assert!(cli::certify(&fam, 0.5, &g, CertMode::Single).is_err());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let quad = problem_file("quadratic_ball.json");
    let quad = quad.to_str().unwrap();
    let csv = dir.path().join("out.csv");
    let csv = csv.to_str().unwrap();
    assert_eq!(run(&["solve", "--spec", quad, "--steps", "10", "--out", csv]), 0);
    assert_eq!(run(&["solve", "--spec", problem_file("bad_step.json").to_str().unwrap()]), 2);
    assert_eq!(run(&["solve", "--spec", "/nonexistent.json"]), 2);
    assert_eq!(run(&["solve", "--spec", quad, "--scheme", "newton"]), 2);
    assert_eq!(run(&["frobnicate"]), 2);
    let div = write_tmp(&dir, "div.json", OVERFLOW);
    assert_eq!(run(&["solve", "--spec", &div, "--steps", "100", "--out", csv]), 3);
    let harm = problem_file("harmonic_steps.json");
    let cert = dir.path().join("c.json");
    let cert = cert.to_str().unwrap();
    assert_eq!(run(&["certify", "--spec", harm.to_str().unwrap(), "--epsilon", "0.5", "--mode", "single", "--out", cert]), 4);
    let far = write_tmp(&dir, "far.json", FAR_ROTATION);
    assert_eq!(run(&["certify", "--spec", &far, "--epsilon", "0.5", "--mode", "asy", "--out", cert]), 5);
    assert_eq!(run(&["certify", "--spec", quad, "--epsilon=-1", "--mode", "asy", "--out", cert]), 2);
    assert_eq!(run(&["certify", "--spec", quad, "--epsilon", "0.5", "--g", "n+", "--mode", "single", "--out", cert]), 2);
}

#[test]
fn binary_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("traj.csv");
    let out = Command::new(env!("CARGO_BIN_EXE_hsdm"))
        .args(["solve", "--spec"])
        .arg(problem_file("quadratic_ball.json"))
        .args(["--steps", "0", "--out"])
        .arg(&csv)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "n,lambda,x0,x1,residual");
    assert!(lines[1].starts_with("0,"));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["steps"], 0);

    let to_stdout = Command::new(env!("CARGO_BIN_EXE_hsdm"))
        .args(["solve", "--steps", "5", "--spec"])
        .arg(problem_file("quadratic_ball.json"))
        .output()
        .unwrap();
    assert_eq!(String::from_utf8(to_stdout.stdout).unwrap().lines().count(), 7);
    assert!(serde_json::from_slice::<serde_json::Value>(&to_stdout.stderr).is_ok());

    let bad = Command::new(env!("CARGO_BIN_EXE_hsdm")).args(["solve", "--spec", "/nope.json"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(!bad.stderr.is_empty());
}

#[test]
fn verify_is_deterministic_for_a_seed() {
    let p = Problem::load(problem_file("quadratic_ball.json")).unwrap();
    let opts = VerifyOptions { cases: 40, steps: 500, seed: Some(9), ..Default::default() };
    let a = cli::verify(&p, Suite::Lemmas, &opts).unwrap();
    let b = cli::verify(&p, Suite::Lemmas, &opts).unwrap();
    assert_eq!(a, b);
    assert!(a.passed);
    assert_eq!(a.seed, 9);

    let dir = tempfile::tempdir().unwrap();
    let (f1, f2) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for f in [&f1, &f2] {
        let code = run(&[
            "verify",
            "--spec",
            problem_file("two_projection.json").to_str().unwrap(),
            "--suite",
            "confinement",
            "--steps",
            "300",
            "--out",
            f.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
    }
    assert_eq!(std::fs::read(&f1).unwrap(), std::fs::read(&f2).unwrap());
}

#[test]
fn tiny_budgets_report_rather_than_fail() {
    let p = Problem::load(problem_file("quadratic_ball.json")).unwrap();
    let opts = VerifyOptions { cases: 10, steps: 100, budget: Some(3), ..Default::default() };
    let r = cli::verify(&p, Suite::Adversary, &opts).unwrap();
    assert!(r.passed);
    assert!(r.audits.iter().all(|a| a.status == hsdm::verify::RunStatus::BudgetExceeded));
}
