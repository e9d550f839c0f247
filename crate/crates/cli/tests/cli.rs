use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_locint")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

#[test]
fn invariants_examples() {
    let v = json(&["invariants", "-p", "3", "--diag", "1,2,3"]);
    assert_eq!(v["invariants"]["eps_sign"], "-1");
    assert_eq!(v["invariants"]["admissible"], true);
    let v = json(&["invariants", "-p", "3", "--diag", "1,1,3"]);
    assert_eq!(v["invariants"]["admissible"], false);
    let v = json(&["invariants", "-p", "3", "--matrix", "0,1,0,1,0,0,0,0,1"]);
    assert_eq!(v["invariants"]["exponents"], serde_json::json!(["0", "0", "0"]));
}

#[test]
fn intersect_family_value_agrees_on_all_routes() {
    let v = json(&["intersect", "-p", "3", "--diag", "1,2,27"]);
    for route in ["closed", "density", "case_table"] {
        assert_eq!(v["values"][route], "2", "{route}");
    }
    assert_eq!(v["agreement"], true);
}

#[test]
fn intersect_runs_tree_route_and_global_multiplier() {
    let v = json(&["intersect", "-p", "3", "--exponents", "1,3,3", "--global-multiplier", "-5"]);
    assert_eq!(v["values"]["closed"], "-8");
    assert_eq!(v["values"]["combinatorial"], "-8");
    assert_eq!(v["global"]["value"], "40");
    assert_eq!(v["provenance"]["radius"], "3");
}

#[test]
fn density_oracle_matches_series() {
    let v = json(&["density", "-p", "3", "--diag", "1,2,3", "--r", "1", "--oracle"]);
    let level = &v["levels"][0];
    assert_eq!(level["oracle"]["normalized"], level["series_value"]);
    assert_eq!(level["series_value"], "4480/6561");
    assert_eq!(v["values"]["closed"], "1");
}

#[test]
fn density_accepts_inadmissible_input() {
    let v = json(&["density", "-p", "3", "--diag", "1,1,3"]);
    assert_eq!(v["values"]["closed"], Value::Null);
    assert!(v["interpretation"].as_str().unwrap().contains("not admissible"));
}

#[test]
fn verify_grid_exits_zero() {
    let v = json(&["verify", "-p", "3", "--max-a", "7"]);
    assert_eq!(v["summary"]["disagreements"], "0");
    assert!(v["rows"].as_array().unwrap().len() > 100);
}

#[test]
fn json_round_trip_is_byte_identical() {
    for args in [
        &["intersect", "-p", "5", "--diag", "1,5,25"][..],
        &["density", "-p", "3", "--diag", "1,2,3"],
        &["building", "-p", "3", "--diag", "1,2,3"],
    ] {
        let out = run(args);
        assert!(out.status.success());
        let text = String::from_utf8(out.stdout).unwrap();
        let parsed: Value = serde_json::from_str(&text).unwrap();
        let again = serde_json::to_string_pretty(&parsed).unwrap() + "\n";
        assert_eq!(again, text);
    }
}

#[test]
fn csv_has_one_row_per_tuple() {
    let out = run(&["verify", "-p", "3", "--max-a", "2", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("p,a1,a2,a3,c1,c2,c3"));
    let grid = json(&["verify", "-p", "3", "--max-a", "2"]);
    assert_eq!(lines.count(), grid["rows"].as_array().unwrap().len());
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| run(args).status.code();
    assert_eq!(code(&["frobnicate"]), Some(1));
    assert_eq!(code(&["invariants", "-p", "3", "--diag", "1,x,3"]), Some(1));
    assert_eq!(code(&["invariants", "-p", "3", "--diag", "1,0,3"]), Some(1));
    assert_eq!(code(&["intersect", "-p", "3", "--diag", "1,1,3"]), Some(2));
    assert_eq!(code(&["density", "-p", "3", "--diag", "1,2,3", "--oracle", "--budget", "10"]), Some(3));
}

#[test]
fn errors_print_nothing_on_stdout() {
    let out = run(&["intersect", "-p", "3", "--diag", "1,1,3"]);
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}
