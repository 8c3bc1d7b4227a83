use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chargesched"))
}

fn repo_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_instance(dir: &Path, requests: &str) -> PathBuf {
    let path = dir.join("instance.json");
    let text = format!(r#"{{"cost": {{"a": 0.0001, "b": 0.00006}}, "requests": [{requests}]}}"#);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn solve_single_pev_is_uniform() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(
        dir.path(),
        r#"{"id": 1, "arrival_h": 0, "deadline_h": 4, "demand_kwh": 4, "max_rate_kw": 3.3, "capacity_kwh": 35}"#,
    );
    let out = dir.path().join("schedule.json");
    let o = run(&["solve", inst.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["intervals"].as_array().unwrap().len(), 1);
    assert!((v["intervals"][0]["total_kw"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((v["intervals"][0]["rates"]["1"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    // (1e-4 * 1 + 6e-5 * 1) * 4 h
    assert!((v["cost"].as_f64().unwrap() - 6.4e-4).abs() < 1e-15);
}

#[test]
fn solve_two_pev_balances_and_passes_kkt() {
    let o = run(&["solve", repo_file("configs/instances/two_pev.json").to_str().unwrap()]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    for iv in v["intervals"].as_array().unwrap() {
        assert!((iv["total_kw"].as_f64().unwrap() - 1.5).abs() < 1e-12);
    }
    assert_eq!(v["kkt"]["passed"], Value::Bool(true));
}

#[test]
fn solve_rejects_infeasible_request_by_id() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(
        dir.path(),
        r#"{"id": 1, "arrival_h": 0, "deadline_h": 4, "demand_kwh": 4, "max_rate_kw": 3.3, "capacity_kwh": 35},
           {"id": 9, "arrival_h": 0, "deadline_h": 4, "demand_kwh": 14, "max_rate_kw": 3.3, "capacity_kwh": 35}"#,
    );
    let o = run(&["solve", inst.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("infeasible") && err.contains('9'), "{err}");
}

#[test]
fn malformed_instance_is_a_parse_error_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        "{\n  \"cost\": {\"a\": 1e-4, \"b\": 6e-5},\n  \"requests\": [ {\"id\": 1,, } ]\n}",
    )
    .unwrap();
    let o = run(&["solve", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn unknown_algorithm_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = repo_file("configs/scenario1.json");
    let o = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--algo",
        "greedy",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    for name in ["oa", "orchard", "avg", "eg"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn invalid_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(repo_file("configs/scenario1.json"))
        .unwrap()
        .replace("\"horizon_h\": 24.0", "\"horizon_h\": -1.0");
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, text).unwrap();
    let o = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--runs",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("horizon_h"));
}

#[test]
fn simulate_twice_gives_identical_files() {
    let cfg = repo_file("configs/scenario1.json");
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let o = run(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--runs",
            "3",
            "--seed",
            "11",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let read = |f: &str| std::fs::read(dir.path().join(f)).unwrap();
        outputs.push((read("results.csv"), read("summary.csv")));
        let manifest: Value = serde_json::from_slice(&read("manifest.json")).unwrap();
        assert_eq!(manifest["seeds"], serde_json::json!([11, 12, 13]));
    }
    assert_eq!(outputs[0], outputs[1]);
    let results = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert!(results.starts_with("seed,algorithm,q,cost,offline_cost,ratio\n"));
    assert_eq!(results.lines().count(), 1 + 3 * 4);
}

#[test]
fn sweep_single_q_matches_simulate() {
    let cfg = repo_file("configs/scenario2.json");
    let sim_dir = tempfile::tempdir().unwrap();
    let sweep_dir = tempfile::tempdir().unwrap();
    let common = ["--config", cfg.to_str().unwrap(), "--runs", "4", "--seed", "5"];
    let o = run(&[
        &["simulate"][..],
        &common,
        &["--algo", "orchard", "--out", sim_dir.path().to_str().unwrap()],
    ]
    .concat());
    assert!(o.status.success());
    let o = run(&[
        &["sweep-q"][..],
        &common,
        &["--sweep", "1.46:1.46:0.1", "--out", sweep_dir.path().to_str().unwrap()],
    ]
    .concat());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let summary = std::fs::read_to_string(sim_dir.path().join("summary.csv")).unwrap();
    let sim_mean = summary.lines().nth(1).unwrap().split(',').nth(3).unwrap().to_string();
    let sweep = std::fs::read_to_string(sweep_dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<&str> = sweep.lines().collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1].split(',').nth(1).unwrap(), sim_mean);
}

#[test]
fn sweep_at_unit_speedup_equals_oa_mean() {
    let cfg = repo_file("configs/scenario1.json");
    let sim_dir = tempfile::tempdir().unwrap();
    let sweep_dir = tempfile::tempdir().unwrap();
    let common = ["--config", cfg.to_str().unwrap(), "--runs", "3", "--seed", "2"];
    assert!(run(&[
        &["simulate"][..],
        &common,
        &["--algo", "oa", "--out", sim_dir.path().to_str().unwrap()]
    ]
    .concat())
    .status
    .success());
    assert!(run(&[
        &["sweep-q"][..],
        &common,
        &["--sweep", "1:1.2:0.2", "--out", sweep_dir.path().to_str().unwrap()]
    ]
    .concat())
    .status
    .success());
    let summary = std::fs::read_to_string(sim_dir.path().join("summary.csv")).unwrap();
    let oa_mean = summary.lines().nth(1).unwrap().split(',').nth(3).unwrap().to_string();
    let sweep = std::fs::read_to_string(sweep_dir.path().join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().nth(1).unwrap().split(',').nth(1).unwrap(), oa_mean);
}

#[test]
fn zero_step_sweep_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = repo_file("configs/scenario1.json");
    let o = run(&[
        "sweep-q",
        "--config",
        cfg.to_str().unwrap(),
        "--sweep",
        "1:2:0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_suites_pass() {
    for suite in ["kkt", "oracle", "online-invariants"] {
        let o = run(&["verify", suite, "--count", "25", "--seed", "3"]);
        assert!(o.status.success(), "{suite}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).contains("25/25"));
    }
}

#[test]
fn generated_instance_solves() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("day.json");
    let cfg = repo_file("configs/scenario1.json");
    assert!(run(&[
        "generate",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "4",
        "--out",
        inst.to_str().unwrap()
    ])
    .status
    .success());
    let o = run(&[
        "solve",
        inst.to_str().unwrap(),
        "--out",
        dir.path().join("s.json").to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn missing_arguments_exit_with_usage_code() {
    assert_eq!(run(&["simulate"]).status.code(), Some(2));
}
