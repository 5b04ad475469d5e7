use std::process::{Command, Output};

use dlogdist::cli::RunRecord;
use serde_json::{json, Value};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dlogdist"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn record(args: &[&str]) -> RunRecord {
    let out = run(args);
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{args:?}: {e}"))
}

#[test]
fn dlog_of_five_mod_seven() {
    let out = run(&["dlog", "--p", "7", "--x", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let rec: RunRecord = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rec.results["log"], json!(5));
    assert_eq!(rec.results["g"], json!(3));
}

#[test]
fn top_level_keys() {
    let out = run(&["image", "--p", "11"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["checks", "config", "results", "timing", "version"]);
    assert_eq!(
        v["results"]["numerators"],
        json!([0, 1, 2, 3, 4, 5, 6, 7, 8, 9])
    );
}

#[test]
fn trivial_resolvent_is_p_minus_one() {
    let rec = record(&["resolvent", "--p", "7", "--k", "0", "--u", "0"]);
    assert_eq!(rec.results["value"]["re"], json!(6.0));
    assert_eq!(rec.results["value"]["im"], json!(0.0));
}

#[test]
fn adjacent_pairs_split_evenly() {
    let out = run(&[
        "perm",
        "--p",
        "10007",
        "--r",
        "2",
        "--mode",
        "exhaustive-adjacent",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rec: RunRecord = serde_json::from_slice(&out.stdout).unwrap();
    let f = rec.results["fraction"].as_f64().unwrap();
    assert!((0.48..=0.52).contains(&f), "{f}");
}

#[test]
fn failed_check_exits_one() {
    // a two-integer window is far from MN/p
    let out = run(&["corollary1", "--p", "101", "--s", "0", "--t", "2"]);
    assert_eq!(out.status.code(), Some(1));
    let rec: RunRecord = serde_json::from_slice(&out.stdout).unwrap();
    assert!(!rec.checks["within_delta"]);

    let out = run(&["primroot", "--p", "7", "--g", "2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_input_exits_two() {
    for args in [
        &["dlog", "--p", "9", "--x", "2"][..],
        &["dlog", "--p", "7", "--g", "2", "--x", "3"],
        &["dlog", "--p", "7", "--x", "0"],
        &["image", "--p", "7", "--a", "3", "--r", "2", "--n", "3"],
        &["discrepancy", "--p", "7", "--alpha", "0.6", "--beta", "0.2"],
        &["poly", "--p", "7", "--coeffs", "1,6"],
        &["multibase", "--p", "11", "--bases", "3:1"],
        &["perm", "--p", "11", "--r", "9"],
        &["resolvent", "--p", "7"],
        &["nonsense"],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("verify-eq4"));
}

#[test]
fn csv_rows() {
    let out = run(&["dlog", "--p", "7", "--x", "5", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("key,value"));
    assert!(text.lines().any(|l| l == "results.log,5"));
    assert!(text.lines().any(|l| l == "checks.round_trip,true"));
}

#[test]
fn sweep_emits_one_record_per_prime() {
    let out = run(&["sweep", "--primes", "101,1009"]);
    assert_eq!(out.status.code(), Some(0));
    let recs: Vec<RunRecord> = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(recs.len(), 2);
    assert_eq!(recs[1].config["p"], json!(1009));
    assert!(recs.iter().all(RunRecord::passed));
}

#[test]
fn every_subcommand_runs() {
    for args in [
        &["primroot", "--p", "1000003"][..],
        &["discrepancy", "--p", "101", "--n", "50", "--oracle"],
        &[
            "discrepancy",
            "--p",
            "101",
            "--alpha",
            "1/4",
            "--beta",
            "0.75",
            "--half-open",
        ],
        &[
            "phasesum", "--p", "101", "--a", "3", "--r", "7", "--n", "10",
        ],
        &["phasesum", "--p", "101", "--u", "5"],
        &["logsum", "--p", "101", "--k", "3"],
        &["verify-eq4", "--p", "101", "--k", "2", "--z", "5"],
        &["verify-eq5", "--p", "101", "--n", "40", "--samples", "5"],
        &["verify-eq7", "--p", "1009", "--n", "500"],
        &["verify-eq7", "--p", "1009", "--k", "1,2,3"],
        &["et-bound", "--p", "101", "--K", "10"],
        &["theorem1", "--p", "1009", "--n", "504", "--samples", "10"],
        &["corollary1", "--p", "1009", "--s", "0", "--t", "1008"],
        &["union-check", "--p", "101", "--samples", "10"],
        &["poly", "--p", "101", "--degree", "3", "--seed", "4"],
        &["poly", "--p", "101", "--coeffs", "-1,0,2"],
        &[
            "multibase",
            "--p",
            "101",
            "--linear",
            "1",
            "--bases",
            "2:1,3:-1",
        ],
        &["perm", "--p", "101", "--r", "3", "--mode", "exhaustive"],
    ] {
        let out = run(args);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let rec: RunRecord = serde_json::from_slice(&out.stdout).unwrap();
        assert!(rec.passed(), "{args:?}");
    }
}

#[test]
fn seeded_runs_repeat() {
    let args = ["poly", "--p", "1009", "--degree", "4", "--seed", "11"];
    let mut a = record(&args);
    let mut b = record(&args);
    a.timing.elapsed_seconds = 0.0;
    b.timing.elapsed_seconds = 0.0;
    assert_eq!(a, b);
    let c = record(&["poly", "--p", "1009", "--degree", "4", "--seed", "12"]);
    assert_ne!(a.results["coefficients"], c.results["coefficients"]);
}
