//! End-to-end runs of the `defectoscope` binary.

use defectoscope::io::load_dfsc;
use defectoscope::minimizer::Status;
use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_defectoscope"))
        .args(args)
        .env("DEFECTOSCOPE_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn json_file(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).expect("file written")).expect("valid JSON")
}

#[test]
fn check_modulus_reports_alpha_and_psi_bound() {
    let out = run(&["check-modulus", "--p", "1.5", "--b", "1", "--meta", "/dev/null"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["alpha"], 1.0);
    assert!((v["psi_bound"].as_f64().unwrap() - 1.5).abs() < 1e-6);
    assert_eq!(v["admissible"], true);
}

#[test]
fn exponent_out_of_range_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let meta = dir.path().join("m.json");
    let out = run(&["check-modulus", "--p", "2.5", "--meta", path(&meta)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("(1, 2)"));
    let m = json_file(&meta);
    assert_eq!(m["exit_code"], 1);
    assert_eq!(m["error"]["kind"], "config");
}

#[test]
fn json_errors_are_machine_readable() {
    let dir = tempfile::tempdir().unwrap();
    let meta = dir.path().join("m.json");
    let out = run(&["--json-errors", "generate", "--grid", "2", "--meta", path(&meta)]);
    assert_eq!(out.status.code(), Some(1));
    let line = String::from_utf8_lossy(&out.stderr);
    let v: Value = serde_json::from_str(line.trim()).expect("one JSON object on stderr");
    assert_eq!(v["error"]["kind"], "config");
    assert_eq!(v["error"]["exit_code"], 1);
    let msg = v["error"]["message"].as_str().unwrap();
    assert!(msg.contains("io.out") && msg.contains("grid.n"), "{msg}");
}

#[test]
fn generated_hedgehog_analyses_to_one_point() {
    let dir = tempfile::tempdir().unwrap();
    let field = dir.path().join("h.dfsc");
    let report = dir.path().join("h.json");
    assert_eq!(run(&["generate", "--kind", "hedgehog", "--grid", "20", "--out", path(&field)]).status.code(), Some(0));
    let out = run(&["analyze", "--in", path(&field), "--out", path(&report)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_file(&report);
    assert_eq!(v["schema"], "defectoscope.report/1");
    assert_eq!(v["target"], "RP2");
    assert_eq!(v["report"]["lines"].as_array().unwrap().len(), 0);
    let points = v["report"]["points"].as_array().unwrap();
    assert_eq!(points.len(), 1);
    assert_eq!(points[0]["degree"], 1);
    assert_eq!(v["input_status"], Value::Null);

    let sidecar = json_file(&dir.path().join("h.dfsc.meta.json"));
    assert_eq!(sidecar["command"], "generate");
    assert_eq!(sidecar["exit_code"], 0);
    assert_eq!(sidecar["config"]["grid.n"], "20");
    assert_eq!(sidecar["config"]["field.kind"], "hedgehog");
    assert!(sidecar["defaulted"].as_array().unwrap().iter().any(|k| k == "seed"));
    assert_eq!(sidecar["outputs"][0], path(&field));
}

#[test]
fn unconverged_minimisation_exits_with_two_and_keeps_its_status() {
    let dir = tempfile::tempdir().unwrap();
    let field = dir.path().join("u.dfsc");
    let out = run(&["minimize", "--kind", "hedgehog", "--grid", "12", "--max-iters", "3", "--out", path(&field)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unconverged"));
    assert_eq!(load_dfsc(&field).unwrap().status, Some(Status::Unconverged));
    let trace = std::fs::read_to_string(dir.path().join("u.trace.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some("iter,energy,grad_norm,step"));
    assert_eq!(trace.lines().count(), 5);
    let meta = json_file(&dir.path().join("u.dfsc.meta.json"));
    assert_eq!(meta["status"], "unconverged");
    assert_eq!(meta["error"]["kind"], "not-converged");
    assert_eq!(meta["summary"]["iterations"], 3);
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let field = dir.path().join("c.dfsc");
    std::fs::write(&cfg, format!("# constant field\ntarget = S2\ngrid.n = 9\nfield.kind = constant\nio.out = {}\n", path(&field)))
        .unwrap();
    let out = run(&["generate", "--config", path(&cfg), "--set", "field.direction=1,0,0"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let f = load_dfsc(&field).unwrap().field;
    assert_eq!(f.target().name(), "S2");
    assert_eq!(f.grid().n(), [9, 9, 9]);
    assert_eq!(f.value(0), &[1.0, 0.0, 0.0]);

    std::fs::write(&cfg, "grid.n = 9\ngrid.n = 10\n").unwrap();
    let out = run(&["generate", "--config", path(&cfg), "--out", path(&field)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("duplicate key"));
}

#[test]
fn lift_reports_the_disclination_chain() {
    let dir = tempfile::tempdir().unwrap();
    let field = dir.path().join("d.dfsc");
    let lifted = dir.path().join("d_lift.dfsc");
    let gen = run(&["generate", "--kind", "disclination(1/2)", "--grid", "12", "--shape", "box", "--out", path(&field)]);
    assert_eq!(gen.status.code(), Some(0));
    let out = run(&["lift", "--in", path(&field), "--out", path(&lifted)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-orientable"));
    let chain = std::fs::read_to_string(dir.path().join("d_lift.chain.csv")).unwrap();
    assert!(chain.lines().count() > 1);
    assert!(!lifted.exists());
}

#[test]
fn lift_of_an_orientable_field_writes_a_sphere_field() {
    let dir = tempfile::tempdir().unwrap();
    let field = dir.path().join("s.dfsc");
    let lifted = dir.path().join("s_lift.dfsc");
    assert_eq!(run(&["generate", "--kind", "smooth-random", "--grid", "10", "--out", path(&field)]).status.code(), Some(0));
    assert_eq!(run(&["lift", "--in", path(&field), "--out", path(&lifted)]).status.code(), Some(0));
    let f = load_dfsc(&lifted).unwrap().field;
    assert_eq!(f.target().name(), "S2");
}

#[test]
fn monotonicity_writes_one_report_per_center() {
    let dir = tempfile::tempdir().unwrap();
    let field = dir.path().join("h.dfsc");
    let report = dir.path().join("m.json");
    assert_eq!(run(&["generate", "--kind", "hedgehog", "--grid", "16", "--out", path(&field)]).status.code(), Some(0));
    let out = run(&[
        "monotonicity",
        "--in",
        path(&field),
        "--centers",
        "0.01,0.02,0.03;0.1,0,0",
        "--r",
        "0.3",
        "--big-r",
        "0.6",
        "--out",
        path(&report),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_file(&report);
    let reports = v.as_array().unwrap();
    assert_eq!(reports.len(), 2);
    assert_eq!(reports[1]["big_r"], 0.6);
    assert_eq!(reports[0]["rhs_nonnegative"], true);
}

#[test]
fn penalized_run_writes_director_and_q_tensor_files() {
    let dir = tempfile::tempdir().unwrap();
    let field = dir.path().join("p.dfsc");
    let out = run(&["minimize-penalized", "--kind", "hedgehog", "--grid", "8", "--epsilon", "0.3", "--out", path(&field)]);
    assert!(matches!(out.status.code(), Some(0 | 2)), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(load_dfsc(&field).unwrap().status.is_some());
    let q = std::fs::read_to_string(dir.path().join("p.q.vtk")).unwrap();
    assert!(q.contains("TENSORS Q double"));
}

#[test]
fn export_picks_the_format_from_the_extension() {
    let dir = tempfile::tempdir().unwrap();
    let field = dir.path().join("c.dfsc");
    assert_eq!(run(&["generate", "--kind", "constant", "--grid", "8", "--out", path(&field)]).status.code(), Some(0));
    for (name, marker) in [("c.vtk", "STRUCTURED_POINTS"), ("c.csv", "x,y,z,c0,c1,c2,boundary")] {
        let target = dir.path().join(name);
        assert_eq!(run(&["export", "--in", path(&field), "--out", path(&target)]).status.code(), Some(0));
        assert!(std::fs::read_to_string(&target).unwrap().contains(marker));
    }
    let out = run(&["export", "--in", path(&field), "--out", path(&dir.path().join("c.json"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_cleanly() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["generate", "minimize", "minimize-penalized", "lift", "analyze", "monotonicity", "check-modulus", "export"] {
        assert!(text.contains(sub), "{sub} missing from help");
    }
}
