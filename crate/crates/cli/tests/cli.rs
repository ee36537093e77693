use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hecke-afl")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> (Value, i32) {
    let out = run(args);
    let v = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (v, out.status.code().unwrap_or(-1))
}

#[test]
fn satake_of_f1() {
    let (v, code) = json(&["satake", "--family", "f", "--n", "2", "--m", "1"]);
    assert_eq!(code, 0);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["result"]["sat"], "q*s1 + q");
    let (v, _) = json(&["satake", "--family", "f'", "--m", "2"]);
    assert_eq!(v["result"]["sat"], "q^2*sigma1^2 - q^2*sigma2");
    let (v, _) = json(&["satake", "--family", "fbracket", "--n", "3", "--t", "2"]);
    assert_eq!(v["result"]["sat"], "q^2*s1 + q - 1");
}

#[test]
fn lattice_count_at_rank_two() {
    let (v, code) = json(&["lattice", "count", "--n", "2", "--t", "2"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["count"], 4);
    let out = run(&["--format", "table", "lattice", "count", "--n", "2", "--t", "2"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("result.count: 4"));
}

#[test]
fn afl_check_passes() {
    let (v, code) = json(&["afl-check", "--r-list", "1,3,5", "--m-max", "4"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["kind"], "AFL");
    assert_eq!(v["result"]["summary"]["failed"], 0);
    assert_eq!(v["result"]["summary"]["passed"], 15);
}

#[test]
fn rationals_are_strings() {
    let (v, code) = json(&["orb", "--a", "1/2", "--b", "1", "--m", "0"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["tilde"]["r"], 1);
    assert_eq!(v["result"]["tilde"]["dvalue0_logq"], "-1/1");
}

#[test]
fn output_is_deterministic() {
    for args in [&["fl-check", "--sample-size", "20", "--m-max", "3"][..], &["kernel-check"], &["atomic", "--n", "3", "--t", "2"]] {
        let a = run(args);
        let b = run(args);
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn out_flag_writes_the_report() {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("coprime.json");
    let out = run(&["coprime-check", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["result"]["parameters"]["check"], "coprimality");
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    assert_eq!(run(&["--precision", "4", "coprime-check"]).status.code(), Some(2));
    assert_eq!(run(&["--p", "9", "coprime-check"]).status.code(), Some(2));
    assert_eq!(run(&["afl-check", "--r-list", "2"]).status.code(), Some(2));
    assert_eq!(run(&["satake", "--family", "f", "--n", "3", "--m", "1"]).status.code(), Some(2));
    let budget = run(&["--budget", "100", "lattice", "comm", "--n", "4", "--t", "2", "--t2", "4"]);
    assert_eq!(budget.status.code(), Some(3));
    let threads = Command::new(env!("CARGO_BIN_EXE_hecke-afl"))
        .arg("coprime-check")
        .env("HECKE_AFL_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(threads.status.code(), Some(2));
}

#[test]
fn thread_cap_keeps_results() {
    let capped = Command::new(env!("CARGO_BIN_EXE_hecke-afl"))
        .args(["fl-check", "--sample-size", "20"])
        .env("HECKE_AFL_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(capped.stdout, run(&["fl-check", "--sample-size", "20"]).stdout);
}
