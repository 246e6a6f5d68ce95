use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spaceswitch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let mut all = vec!["--json"];
    all.extend_from_slice(args);
    let out = run(&all);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid json")
}

#[test]
fn params_selects_the_cheapest_pair() {
    let v = json(&["params", "--bits", "8"]);
    assert_eq!(v["selected"]["p"], 5);
    assert_eq!(v["selected"]["r"], 4);
    let cands = v["candidates"].as_array().unwrap();
    let costs: Vec<u64> = cands.iter().map(|c| c["nonscalar"].as_u64().unwrap()).collect();
    assert!(costs.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn params_reports_infeasible_budgets() {
    let out = run(&["params", "--bits", "16", "--depth-budget", "5"]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["params", "--bits", "40"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn compare_matches_integers() {
    for (a, b, op) in [("-12", "30", "lt"), ("7", "7", "eq"), ("9", "-3", "ge"), ("4", "5", "gt")] {
        let v = json(&["compare", "--a", a, "--b", b, "--op", op, "--p", "7", "--r", "3"]);
        assert_eq!(v["result"], v["expected"], "{a} {op} {b}");
        let total: u64 = v["report"]["stages"]
            .as_object()
            .unwrap()
            .values()
            .map(|s| s["nonscalar"].as_u64().unwrap())
            .sum();
        assert_eq!(total, v["report"]["totals"]["nonscalar"].as_u64().unwrap());
    }
}

#[test]
fn compare_rejects_out_of_range_differences_and_bad_primes() {
    assert_eq!(run(&["compare", "--a", "100", "--b", "-100", "--p", "5", "--r", "2"]).status.code(), Some(3));
    assert_eq!(run(&["compare", "--a", "1", "--b", "2", "--p", "4", "--r", "2"]).status.code(), Some(3));
    assert_eq!(run(&["compare", "--a", "1", "--b", "2", "--p", "5"]).status.code(), Some(3));
}

#[test]
fn extract_counts_evaluations_per_strategy() {
    let v = json(&["extract", "--x", "-47", "--strategy", "all", "--p", "5", "--r", "3"]);
    let runs = v["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 4);
    for run in runs {
        assert_eq!(run["digits"], v["expected"]);
    }
    let ss = runs.iter().find(|r| r["strategy"] == "space-switch").unwrap();
    let evals: u64 = ss["poly_evals"].as_object().unwrap().values().map(|x| x.as_u64().unwrap()).sum();
    assert_eq!(evals, 2);
}

#[test]
fn verify_all_modes_pass() {
    let v = json(&["verify", "--p", "3", "--r", "3", "--seeds", "5"]);
    let reports = v.as_array().unwrap();
    assert_eq!(reports.len(), 4);
    assert!(reports.iter().all(|r| r["failure_count"] == 0));
}

#[test]
fn dump_poly_prints_certified_coefficients() {
    let v = json(&["dump-poly", "--kind", "g", "--p", "5", "--e", "2"]);
    assert_eq!(v["modulus"], 25);
    assert_eq!(v["verified"], true);
    let coeffs: Vec<i64> = v["coeffs"].as_array().unwrap().iter().map(|c| c.as_i64().unwrap()).collect();
    // lowest digit of x mod 25: every input 0..25 lands on its balanced digit
    for x in -12i64..=12 {
        let y = coeffs.iter().rev().fold(0i64, |acc, &c| (acc * x + c).rem_euclid(25));
        let want = (x + 2).rem_euclid(5) - 2;
        assert_eq!(y, want.rem_euclid(25), "x = {x}");
    }
    let v = json(&["dump-poly", "--kind", "lt", "--p", "7"]);
    assert_eq!(v["verified"], true);
    assert_eq!(v["degree"], 6);
}

#[test]
fn synthetic_query_is_exact() {
    let v = json(&["query", "--synthetic", "128", "--bits", "8", "--seed", "3"]);
    assert_eq!(v["result"], v["expected"]);
    assert_eq!(v["matches"], true);
}

#[test]
fn csv_query_with_custom_predicates() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    fs::write(&path, "qty,price\n3,10\n9,20\n12,7\n1,31\n").unwrap();
    let p = path.to_str().unwrap();
    let v = json(&["query", "--csv", p, "--bits", "5", "--where", "qty<10", "--where", "price>=10", "--sum", "price"]);
    assert_eq!(v["result"], 10 + 20 + 31);
    let v = json(&["query", "--csv", p, "--bits", "5", "--where", "qty == 12", "--sum", "qty*price"]);
    assert_eq!(v["result"], 84);
}

#[test]
fn query_on_toy_bgv_prints_the_banner() {
    let out = run(&["--backend", "toy-bgv", "--json", "query", "--synthetic", "3", "--bits", "6"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains(spaceswitch::bgv::INSECURE_BANNER));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"], v["expected"]);
    assert_eq!(v["report"]["params"]["backend"], "toy-bgv");
}

#[test]
fn query_errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    fs::write(&path, "qty,price\n3,10\n").unwrap();
    let p = path.to_str().unwrap();
    assert_eq!(run(&["query", "--csv", p, "--bits", "5", "--where", "nope<3", "--sum", "price"]).status.code(), Some(3));
    assert_eq!(run(&["query", "--csv", p, "--bits", "5", "--where", "qty<3"]).status.code(), Some(3));
    let missing = dir.path().join("missing.csv");
    assert_eq!(
        run(&["query", "--csv", missing.to_str().unwrap(), "--bits", "5", "--sum", "qty"]).status.code(),
        Some(4)
    );
}

#[test]
fn ingest_round_trips_and_writes_ciphertexts() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    fs::write(&csv, "a,b\n1,2\n3,4\n15,0\n").unwrap();
    let out_dir = dir.path().join("enc");
    let out = run(&[
        "--backend",
        "toy-bgv",
        "--json",
        "ingest",
        "--csv",
        csv.to_str().unwrap(),
        "--bits",
        "4",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["round_trip"], true);
    assert_eq!(v["handles"], 6);
    for name in ["a.0.ct", "b.2.ct", "secret.key", "params.json"] {
        assert!(out_dir.join(name).exists(), "{name}");
    }
}

#[test]
fn ingest_rejects_malformed_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    fs::write(&csv, "a,b\n1,99\n").unwrap();
    let out = run(&["ingest", "--csv", csv.to_str().unwrap(), "--bits", "4"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 1"));
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bench.csv");
    let out = run(&[
        "bench",
        "--bits",
        "8",
        "--strategies",
        "space-switch",
        "--pairs",
        "8",
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("bitwidth,p,r,strategy,nonscalar"));
    assert!(lines.next().unwrap().starts_with("8,5,4,space-switch,37,"));
}
