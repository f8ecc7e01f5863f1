use std::process::{Command, Output};

use fanout::gates::analytic_or_failure;
use fanout::Circuit;

fn fanout(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fanout")).args(args).output().unwrap()
}

fn stdout(args: &[&str]) -> String {
    let o = fanout(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

/// Rows after the header, split on commas.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn build_writes_a_loadable_circuit_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("or4.json");
    let out = stdout(&["build", "or-approx", "n=4", "--out", path.to_str().unwrap()]);
    let row = &rows(&out)[0];
    assert_eq!(row[0], "or-approx");
    assert!(row[7].contains("rotations=8"), "{out}");
    let c = Circuit::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(c.stats().depth.to_string(), row[3]);
}

#[test]
fn build_reports_reduction_width_and_constant_depth() {
    let dir = tempfile::tempdir().unwrap();
    let out = |args: &[&str]| {
        let path = dir.path().join("c.json");
        let mut all = args.to_vec();
        all.extend(["--out", path.to_str().unwrap()]);
        rows(&stdout(&all)).remove(0)
    };
    assert!(out(&["build", "or-reduce", "n=7"])[7].contains("outputs=3"));
    assert_eq!(out(&["build", "qfs", "n=3"])[3], out(&["build", "qfs", "n=2"])[3]);
}

#[test]
fn build_rejects_bad_requests() {
    assert_eq!(fanout(&["build", "no-such-thing", "n=3"]).status.code(), Some(2));
    assert_eq!(fanout(&["build", "threshold", "n=3", "t=5"]).status.code(), Some(2));
    assert_eq!(fanout(&["build", "or-approx", "m=3"]).status.code(), Some(2));
}

#[test]
fn simulate_or_approximation() {
    let zero = rows(&stdout(&["simulate", "or-approx", "n=4", "--input", "0000"]));
    assert_eq!(zero.len(), 1);
    assert_eq!((zero[0][1].as_str(), zero[0][2].parse::<f64>().unwrap()), ("0", 1.0));
    let two = rows(&stdout(&["simulate", "or-approx", "n=4", "--input", "0101"]));
    let miss = two.iter().find(|r| r[1] == "0").unwrap()[2].parse::<f64>().unwrap();
    assert!((miss - analytic_or_failure(4, 2)).abs() < 1e-9);
}

#[test]
fn simulate_a_circuit_file_with_shots() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    stdout(&["build", "or-reduce", "n=3", "--out", path.to_str().unwrap()]);
    let out = rows(&stdout(&["simulate", "--circuit", path.to_str().unwrap(), "--shots", "50"]));
    for x in 0..8u32 {
        let bits: String = (0..3).map(|i| if x >> i & 1 == 1 { '1' } else { '0' }).collect();
        let total: usize = out.iter().filter(|r| r[0] == bits).map(|r| r[3].parse::<usize>().unwrap()).sum();
        assert_eq!(total, 50);
        let zero = out.iter().any(|r| r[0] == bits && r[1] == "00");
        assert_eq!(zero, x == 0, "input {bits}");
    }
}

#[test]
fn simulate_qfp_reports_success_rates() {
    let out = rows(&stdout(&["simulate", "qfp", "n=3", "m=8", "--shots", "500"]));
    assert_eq!(out.len(), 8);
    for r in &out {
        assert_eq!(r[1], "500");
        assert!(r[4].parse::<f64>().unwrap() > 0.8, "{r:?}");
    }
}

#[test]
fn simulate_respects_the_qubit_budget() {
    let o = fanout(&["simulate", "qfs", "n=3", "--input", "101", "--qubit-budget", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("qubits"));
}

#[test]
fn runs_are_byte_identical() {
    for args in [
        &["simulate", "or-reduce", "n=4", "--shots", "200", "--seed", "9"][..],
        &["simulate", "qfp", "n=2", "m=4", "--shots", "100"],
        &["verify", "increment"],
        &["bench", "counting", "n=4..32"],
    ] {
        assert_eq!(fanout(args).stdout, fanout(args).stdout, "{args:?}");
    }
    let a = fanout(&["simulate", "qfp", "n=2", "m=4", "--shots", "100", "--seed", "1"]).stdout;
    let b = fanout(&["simulate", "qfp", "n=2", "m=4", "--shots", "100", "--seed", "2"]).stdout;
    assert_ne!(a, b);
}

#[test]
fn verify_exit_codes() {
    let o = fanout(&["verify", "fanout-parity"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("suite,check,measured,expected,pass\n"));
    assert!(rows(&text).iter().all(|r| r[4] == "pass"));
    assert_eq!(fanout(&["verify", "1"]).stdout, text.as_bytes());
    assert_eq!(fanout(&["verify", "no-such-suite"]).status.code(), Some(2));
}

#[test]
fn bench_tables_stay_bounded() {
    let out = rows(&stdout(&["bench", "linear-size-or", "n=16..4096"]));
    assert_eq!(out.len(), 9);
    assert!(out.iter().all(|r| r[8].parse::<f64>().unwrap() < 60.0));
    let d = rows(&stdout(&["bench", "iterated-or", "n=64", "d=1..2"]));
    assert_eq!(d.iter().map(|r| r[2].as_str()).collect::<Vec<_>>(), ["1", "2"]);
}
