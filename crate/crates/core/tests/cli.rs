use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lognodal")).args(args).output().unwrap()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

#[test]
fn solve_then_check_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let graph = p(dir.path(), "k2.json");
    let sol = p(dir.path(), "sol.json");
    assert!(run(&["generate", "--topology", "path", "--n", "2", "--well", "v1..v2", "--out", &graph]).status.success());
    let out = run(&["solve", "--graph", &graph, "--mode", "full", "--lambda", "1", "--nodal", "--out", &sol]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&sol).unwrap()).unwrap();
    let level = report["level"].as_f64().unwrap();
    assert!((level - std::f64::consts::E.powi(2)).abs() < 1e-8);

    let out = run(&["check", "--graph", &graph, "--state", &sol, "--mode", "full", "--lambda", "1"]);
    assert!(out.status.success());
    let check: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(check["residual_inf"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn sweep_writes_the_fixed_header() {
    let dir = tempfile::tempdir().unwrap();
    let graph = p(dir.path(), "p6.json");
    run(&["generate", "--topology", "path", "--n", "6", "--well", "v3..v4", "--out", &graph]);
    let out = run(&["sweep", "--graph", &graph, "--lambdas", "1,10,100"]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "lambda,m_lambda,c_lambda,margin_m_minus_2c,gap_to_m_omega,potential_mass,h1_dist_to_limit,tail_mass"
    );
    assert_eq!(lines.len(), 4);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let graph = p(dir.path(), "p6.json");
    run(&["generate", "--topology", "path", "--n", "6", "--well", "v3..v4", "--out", &graph]);

    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["solve", "--graph", &graph]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        run(&["solve", "--graph", &graph, "--mode", "full", "--nodal"]).status.code(),
        Some(1),
        "full mode without --lambda"
    );

    let bad_well = run(&["generate", "--topology", "path", "--n", "6", "--well", "v2,v4"]);
    assert_eq!(bad_well.status.code(), Some(3));

    let outside = p(dir.path(), "outside.json");
    std::fs::write(&outside, r#"{"values": {"v1": 1.0, "v3": 2.0}}"#).unwrap();
    let out = run(&["check", "--graph", &graph, "--state", &outside, "--mode", "dirichlet"]);
    assert_eq!(out.status.code(), Some(3));

    let not_solution = p(dir.path(), "ns.json");
    std::fs::write(&not_solution, r#"{"values": {"v3": 1.0, "v4": -1.0}}"#).unwrap();
    let out = run(&["check", "--graph", &graph, "--state", &not_solution, "--mode", "dirichlet"]);
    assert_eq!(out.status.code(), Some(3));

    // An asymmetric path keeps the residual away from exact zero.
    let asym = p(dir.path(), "p5.json");
    run(&["generate", "--topology", "path", "--n", "5", "--well", "v1..v2", "--w", "1.3", "--out", &asym]);
    let out = run(&[
        "solve", "--graph", &asym, "--mode", "full", "--lambda", "1.7", "--nodal", "--starts", "1", "--tol", "1e-300",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn project_reports_both_projections() {
    let dir = tempfile::tempdir().unwrap();
    let graph = p(dir.path(), "k2.json");
    run(&["generate", "--topology", "path", "--n", "2", "--well", "v1..v2", "--out", &graph]);
    let state = p(dir.path(), "u.json");
    std::fs::write(&state, r#"{"values": {"v1": 1.0, "v2": -2.0}}"#).unwrap();
    let out = run(&["project", "--graph", &graph, "--state", &state, "--lambda", "1"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let (s, t) = (v["pair"]["s"].as_f64().unwrap(), v["pair"]["t"].as_f64().unwrap());
    let e = std::f64::consts::E;
    assert!((s - e).abs() < 1e-9 && (t - e / 2.0).abs() < 1e-9, "({s}, {t})");
}
