//! The `twic` binary: outputs, CSV schema and exit codes.

use serde_json::Value;
use std::process::{Command, Output};

fn twic(args: &[&str], env: Option<(&str, &str)>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_twic"));
    c.args(args).env_remove("TWIC_SEED");
    if let Some((k, v)) = env {
        c.env(k, v);
    }
    c.output().unwrap()
}

fn json_lines(o: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&o.stdout).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn rational(v: &Value) -> (i64, i64) {
    (v["num"].as_i64().unwrap(), v["den"].as_i64().unwrap())
}

#[test]
fn capacity_values() {
    let o = twic(&["capacity", "2", "1", "1", "2"], None);
    assert!(o.status.success());
    let v = &json_lines(&o)[0];
    assert_eq!((v["c_pf"].as_u64(), v["c_no_tilde"].as_u64()), (Some(3), Some(2)));
    let v = &json_lines(&twic(&["capacity", "0", "0", "0", "0"], None))[0];
    assert!(["c_pf", "c_no", "c_pf_tilde", "c_no_tilde"].iter().all(|k| v[k] == 0));
}

#[test]
fn region_vertices() {
    let v = &json_lines(&twic(&["region", "2", "1", "0", "1"], None))[0];
    let vs: Vec<((i64, i64), (i64, i64))> = v["vertices"].as_array().unwrap().iter().map(|p| (rational(&p["r_fwd"]), rational(&p["r_bwd"]))).collect();
    assert_eq!(vs, vec![((0, 1), (0, 1)), ((3, 1), (0, 1)), ((3, 1), (1, 1)), ((0, 1), (1, 1))]);
    let v = &json_lines(&twic(&["region", "4", "2", "1", "3"], None))[0];
    assert!(v["vertices"].as_array().unwrap().iter().any(|p| rational(&p["r_fwd"]) == (6, 1) && rational(&p["r_bwd"]) == (3, 1)));
}

#[test]
fn simulate_vertex_with_certification() {
    let o = twic(&["simulate", "2", "1", "0", "1", "--vertex", "3,1", "--L", "50"], None);
    assert!(o.status.success());
    let lines = json_lines(&o);
    assert_eq!(lines.len(), 2);
    assert_eq!(rational(&lines[0]["achieved"]["r_fwd"]), (300, 101));
    assert_eq!(rational(&lines[0]["achieved"]["r_bwd"]), (100, 101));
    assert_eq!(lines[0]["error_count"], 0);
    assert_eq!(lines[1]["certification"], "check_bounds");
    assert_eq!(lines[1]["within_region"], true);

    let lines = json_lines(&twic(&["simulate", "2", "1", "1", "2", "--vertex", "3,2"], None));
    assert_eq!((rational(&lines[0]["achieved"]["r_fwd"]), rational(&lines[0]["achieved"]["r_bwd"])), ((3, 1), (2, 1)));
}

#[test]
fn exit_codes() {
    assert_eq!(twic(&["simulate", "2", "1", "1", "2", "--vertex", "9,9"], None).status.code(), Some(3));
    assert_eq!(twic(&["capacity", "x", "1", "1", "2"], None).status.code(), Some(2));
    assert_eq!(twic(&["simulate", "2", "1", "1", "2"], None).status.code(), Some(2));
    assert_eq!(twic(&["decompose", "3", "3"], None).status.code(), Some(0));
    assert_eq!(twic(&["decompose", "4", "5"], None).status.code(), Some(3));
    assert_eq!(twic(&["simulate", "2", "1", "1", "2", "--scheme", "LEMMA3_I", "--i", "3", "--j", "1"], None).status.code(), Some(3));
}

#[test]
fn seed_from_environment() {
    let lines = json_lines(&twic(&["simulate", "2", "1", "1", "2", "--scheme", "SCHEME1"], Some(("TWIC_SEED", "1234"))));
    assert_eq!(lines[0]["seed"], 1234);
    let lines = json_lines(&twic(&["simulate", "2", "1", "1", "2", "--scheme", "SCHEME1", "--seed", "5"], Some(("TWIC_SEED", "1234"))));
    assert_eq!(lines[0]["seed"], 5);
}

#[test]
fn trace_lines() {
    let lines = json_lines(&twic(&["simulate", "2", "1", "1", "2", "--scheme", "SCHEME1", "--blocks", "50", "--trace"], None));
    let tr = lines[0]["trace"].as_array().unwrap();
    assert_eq!(tr.len(), 128);
    assert!(tr[0].as_str().unwrap().starts_with("1 fwd u1:tx="));
    assert!(tr[1].as_str().unwrap().starts_with("1 bwd u1~:tx="));
}

#[test]
fn sweep_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grid.csv");
    let o = twic(&["sweep", "--gamma", "2", "--step", "1/4", "--max", "3", "--base-n", "8", "--out", path.to_str().unwrap()], None);
    assert!(o.status.success());
    let mut rd = csv::Reader::from_path(&path).unwrap();
    let header: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["alpha_num", "alpha_den", "alphat_num", "alphat_den", "n", "m", "nb", "mb", "class"]);
    let rows: Vec<Vec<String>> = rd.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
    let find = |a: &str, ad: &str, b: &str, bd: &str| rows.iter().find(|r| r[0] == a && r[1] == ad && r[2] == b && r[3] == bd).unwrap().clone();
    assert_eq!(find("1", "1", "1", "1")[8], "NO_FEEDBACK_GAIN");
    let half = find("1", "2", "1", "2");
    assert_eq!(&half[4..8], ["8", "4", "16", "8"]);
    assert_eq!(half[8], "FEEDBACK_BUT_NO_INTERACTION_GAIN");
    assert!(rows.iter().any(|r| r[8] == "PERFECT_FEEDBACK_ACHIEVABLE"));
}
