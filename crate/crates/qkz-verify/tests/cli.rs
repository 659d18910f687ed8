use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qkz-verify")).args(args).output().expect("binary runs")
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn without_timings(mut v: Value) -> Value {
    v["environment"].as_object_mut().unwrap().remove("timings_ms");
    v
}

#[test]
fn passing_suite_exits_zero_with_a_complete_report() {
    let out = run(&["barnes", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["schema_version", "config_echo", "checks", "summary"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 15);
    for c in checks {
        for key in ["id", "anchor", "inputs", "computed", "reference", "residual", "tolerance", "pass"] {
            assert!(c.get(key).is_some(), "record lacks {key}");
        }
        assert!(c["computed"]["re"].is_f64() && c["computed"]["im"].is_f64());
    }
    assert_eq!(v["summary"]["pass"], Value::Bool(true));
    assert_eq!(v["config_echo"]["seed"], 42);
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("loose.toml");
    fs::write(&cfg, "[quadrature]\nrel_tol = 0.5\nmax_depth = 1\ninitial_panels = 1\n").unwrap();
    let out = run(&["barnes", "--config", cfg.to_str().unwrap(), "--format", "text"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("FAIL"));
}

#[test]
fn bad_input_exits_two() {
    assert_eq!(run(&["barnes", "--mu-im", "7"]).status.code(), Some(2));
    assert_eq!(run(&["barnes", "--format", "yaml"]).status.code(), Some(2));
    assert_eq!(run(&["nonsense"]).status.code(), Some(2));
    assert_eq!(run(&["detm", "--config", "/nonexistent/qkz.toml"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "seed = 7\n[model]\nn = 3\nzz = 1\n").unwrap();
    let out = run(&["detm", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("line 4"));
}

#[test]
fn same_seed_gives_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for path in [&a, &b] {
        let out = run(&["identities", "--seed", "9", "--out", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    let (mut ra, mut rb) = (without_timings(report(&a)), without_timings(report(&b)));
    for r in [&mut ra, &mut rb] {
        r["config_echo"].as_object_mut().unwrap().remove("output");
    }
    assert_eq!(serde_json::to_string(&ra).unwrap(), serde_json::to_string(&rb).unwrap());

    let c = dir.path().join("c.json");
    run(&["identities", "--seed", "10", "--out", c.to_str().unwrap()]);
    assert_ne!(report(&a)["checks"], report(&c)["checks"]);
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "seed = 5\nsamples = 3\n[model]\nn = 3\n[model.mu]\nre = 0.5\nim = 1.0\n[output]\nformat = \"text\"\n",
    )
    .unwrap();
    let out_path = dir.path().join("r.json");
    let out = run(&["identities", "--config", cfg.to_str().unwrap(), "--seed", "6", "--format", "json", "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = report(&out_path);
    assert_eq!(v["config_echo"]["seed"], 6);
    assert_eq!(v["config_echo"]["mu"]["re"], 0.5);
    assert_eq!(v["checks"].as_array().unwrap().len(), 7 * 3);
}

#[test]
fn narrowing_by_n_and_ell() {
    let out = run(&["spectrum", "--n", "3", "--ell", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let ids: Vec<&str> = v["checks"].as_array().unwrap().iter().map(|c| c["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["spectrum/n3/l1"]);
}

#[test]
fn text_report_has_a_summary_line() {
    let out = run(&["detm", "--n", "2", "--format", "text"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.trim_end().ends_with("5 checks, 5 passed, 0 failed: PASS"), "{text}");
}
