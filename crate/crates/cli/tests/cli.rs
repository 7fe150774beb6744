use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn leafscope(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leafscope"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_ok(args: &[&str]) -> Value {
    let out = leafscope(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn make_cyclic(dir: &Path, r: &str) -> String {
    let path = dir.join("g.json");
    let p = path.to_str().unwrap().to_string();
    let out = leafscope(&["group", "make-cyclic", "--r", r, "--out", &p]);
    assert!(out.status.success());
    p
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(leafscope(&[]).status.code(), Some(2));
    assert_eq!(leafscope(&["group", "make-cyclic"]).status.code(), Some(2));
    assert_eq!(leafscope(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        leafscope(&["field", "--which", "gamma"]).status.code(),
        Some(2)
    );
}

#[test]
fn refusals_exit_with_three_and_json_diagnostic() {
    for args in [
        &["group", "make-cyclic", "--r", "1.5"][..],
        &["current", "mass", "--map", "bogus", "--rmax", "0.9"][..],
        &["localmodel", "annulus", "--a", "2", "--b", "1"][..],
        &[
            "current", "ray", "--map", "identity", "--theta", "0", "--smax", "1.0",
        ][..],
    ] {
        let out = leafscope(args);
        assert_eq!(out.status.code(), Some(3), "{args:?}");
        let diag: Value = serde_json::from_slice(&out.stderr).expect("stderr is JSON");
        assert_eq!(diag["error"], "refused");
        assert!(diag["message"].as_str().unwrap().len() > 5);
    }
}

#[test]
fn missing_file_is_an_io_error() {
    let out = leafscope(&[
        "group",
        "check",
        "--group",
        "/nonexistent/g.json",
        "--depth",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn cyclic_group_file() {
    let v = json_ok(&["group", "make-cyclic", "--r", "0.6"]);
    assert_eq!(v["schema_version"], "leafscope/1");
    let g = &v["generators"][0];
    assert!((g["a_re"].as_f64().unwrap() - 1.25).abs() < 1e-12);
    assert!((g["b_re"].as_f64().unwrap() - 0.75).abs() < 1e-12);
    assert_eq!(g["a_im"].as_f64().unwrap(), 0.0);
    assert!(v["provenance"]["tool_version"].is_string());
}

#[test]
fn group_check_on_cyclic_group() {
    let dir = tempfile::tempdir().unwrap();
    let g = make_cyclic(dir.path(), "0.6");
    let v = json_ok(&[
        "group",
        "check",
        "--group",
        &g,
        "--depth",
        "5",
        "--samples",
        "300",
        "--seed",
        "7",
    ]);
    let r = &v["result"];
    assert_eq!(r["violations"], 0);
    assert_eq!(r["relation_detected"], false);
    assert!(r["coverage"].as_f64().unwrap() > 0.99);
    assert_eq!(v["provenance"]["seed"], 7);
    assert_eq!(v["provenance"]["depth"], 5);
}

#[test]
fn seeds_make_runs_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let g = make_cyclic(dir.path(), "0.4");
    let args = [
        "group",
        "check",
        "--group",
        &g,
        "--depth",
        "4",
        "--samples",
        "100",
        "--seed",
        "3",
    ];
    assert_eq!(leafscope(&args).stdout, leafscope(&args).stdout);
}

#[test]
fn field_csv_and_record() {
    let dir = tempfile::tempdir().unwrap();
    let g = make_cyclic(dir.path(), "0.6");
    let csv = dir.path().join("alpha.csv");
    let c = csv.to_str().unwrap();
    let v = json_ok(&[
        "field", "--group", &g, "--which", "alpha", "--depth", "4", "--grid", "3x8", "--csv", c,
    ]);
    assert_eq!(v["result"]["rows"], 24);
    let rows = leafscope::shell::read_field_csv(std::fs::File::open(&csv).unwrap()).unwrap();
    assert_eq!(rows.len(), 24);
    for r in &rows {
        assert!(r.alpha_lo <= r.alpha + 1e-12 && r.alpha <= r.alpha_hi + 1e-12);
        assert!(r.beta >= r.alpha - 1e-12, "i(β) ≤ β");
    }
    let bad = leafscope(&[
        "field", "--group", &g, "--which", "beta", "--depth", "2", "--grid", "3by8",
    ]);
    assert_eq!(bad.status.code(), Some(3));
}

#[test]
fn floor_values() {
    let v = json_ok(&["horocycle", "floor", "--N", "2", "--n", "4"]);
    let r = &v["result"];
    assert!((r["m"].as_f64().unwrap() - 0.423_648_930_193_601_8).abs() < 1e-12);
    assert_eq!(r["M_exact"], "2/5");
}

#[test]
fn horocycle_check_cyclic() {
    let dir = tempfile::tempdir().unwrap();
    let g = make_cyclic(dir.path(), "0.6");
    // a tiny horodisk away from the fixed points of the generator
    let v = json_ok(&[
        "horocycle",
        "check",
        "--group",
        &g,
        "--zeta",
        "1.5707963",
        "--radius",
        "0.01",
        "--depth",
        "5",
    ]);
    assert_eq!(v["result"]["injective_at_depth"], true);
    assert_eq!(v["result"]["injective_all_depths"], true);
    let v = json_ok(&[
        "horocycle",
        "check",
        "--group",
        &g,
        "--zeta",
        "1.5707963",
        "--radius",
        "0.9",
        "--depth",
        "5",
    ]);
    assert_eq!(v["result"]["injective_at_depth"], false);
}

#[test]
fn construct_writes_a_loadable_group() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.json");
    let svg = dir.path().join("c.svg");
    let o = out.to_str().unwrap();
    let run = leafscope(&[
        "construct",
        "fullmeasure",
        "--stages",
        "3",
        "--deltas",
        "0.125,0.0625",
        "--out",
        o,
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let file: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(file["generators"].as_array().unwrap().len(), 3);
    assert_eq!(
        file["extensions"]["construction"]["levels"]
            .as_array()
            .unwrap()
            .len(),
        3
    );
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
    let v = json_ok(&[
        "group",
        "check",
        "--group",
        o,
        "--depth",
        "3",
        "--samples",
        "100",
    ]);
    assert_eq!(v["result"]["generators"], 3);
}

#[test]
fn localmodel_commands() {
    let v = json_ok(&[
        "localmodel",
        "annulus",
        "--a",
        "0.5",
        "--b",
        "2",
        "--m",
        "5",
    ]);
    assert_eq!(v["result"]["winding"]["certified"], true);
    assert_eq!(v["result"]["refined_certified"], true);
    let v = json_ok(&["localmodel", "strip", "--lambda", "0.5", "--N", "2"]);
    assert_eq!(v["result"]["verdict"]["injective"], false);
    assert_eq!(v["result"]["verdict"]["witness"], 2);
    assert_eq!(v["result"]["covering_degree"], 3);
    let v = json_ok(&["localmodel", "strip", "--lambda", "0.3+1.2i", "--N", "4"]);
    assert_eq!(v["result"]["verdict"]["injective"], true);
}

#[test]
fn current_commands() {
    let v = json_ok(&[
        "current", "mass", "--map", "identity", "--rmax", "0.9", "--points", "2",
    ]);
    let masses = v["result"]["curve"]["masses"].as_array().unwrap();
    let last = masses.last().unwrap().as_f64().unwrap();
    assert!((last - std::f64::consts::PI * 0.81 / 2.0).abs() < 1e-6);
    assert_eq!(v["result"]["nondecreasing"], true);
    let v = json_ok(&[
        "current",
        "ray",
        "--map",
        "annulus:0.5,2",
        "--theta",
        "0",
        "--points",
        "60",
    ]);
    assert!(v["result"]["ray"]["fit"]["r_squared"].as_f64().unwrap() > 0.99);
    let v = json_ok(&[
        "current",
        "mass",
        "--map",
        "poly:0,0,1",
        "--rmax",
        "0.5",
        "--points",
        "1",
    ]);
    let m = v["result"]["curve"]["masses"][0].as_f64().unwrap();
    assert!((m - std::f64::consts::PI * 0.5f64.powi(4) / 2.0).abs() < 1e-6);
}
