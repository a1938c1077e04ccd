use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mglab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mglab"))
        .args(args)
        .current_dir(cwd)
        .env_remove("MGLAB_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[&[&str]] = &[
        &["embed", "--secret", ""],
        &["embed", "--secret", "10", "--eta", "1.5"],
        &["embed", "--secret", "1x0"],
        &["verify", "--circuit", "missing.json", "--secret", "10"],
        &["sq", "--n", "4"],
        &["sq", "--n", "20", "--seed", "1"],
        &["sq", "--n", "3", "--secret", "1010", "--seed", "1"],
        &["lpn", "--n", "4", "--eta", "0.7", "--seed", "1"],
        &["embed", "--secret", "1", "--local", "--nonlocal"],
        &["frobnicate"],
    ];
    for args in cases {
        let out = mglab(args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn seed_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_mglab"))
        .args(["sq", "--n", "3"])
        .current_dir(dir.path())
        .env("MGLAB_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["config"]["seed"], 42);
}

#[test]
fn embed_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    for (mode, eta) in [("--local", "0"), ("--nonlocal", "0"), ("--local", "0.3"), ("--nonlocal", "0.3")] {
        let out = mglab(&["embed", "--secret", "01101", "--eta", eta, mode, "--out", "c.json"], dir.path());
        assert_eq!(out.status.code(), Some(0));
        let summary = json(&out);
        assert_eq!(summary["wires"], 7);

        let out = mglab(
            &["verify", "--circuit", "c.json", "--plan", "c.json.plan.json", "--secret", "01101", "--eta", eta],
            dir.path(),
        );
        assert_eq!(out.status.code(), Some(0), "{mode} eta={eta}");
        assert_eq!(json(&out)["pass"], true);

        // the wrong secret is half a unit away and must fail
        let out = mglab(
            &["verify", "--circuit", "c.json", "--plan", "c.json.plan.json", "--secret", "01100", "--eta", eta],
            dir.path(),
        );
        assert_eq!(out.status.code(), Some(1));
        assert_eq!(json(&out)["pass"], false);
    }
}

#[test]
fn nonlocal_circuit_needs_its_plan() {
    let dir = tempfile::tempdir().unwrap();
    assert!(mglab(&["embed", "--secret", "1011", "--nonlocal", "--out", "c.json"], dir.path()).status.success());
    let out = mglab(&["verify", "--circuit", "c.json", "--secret", "1011"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn embed_to_stdout_is_a_circuit() {
    let dir = tempfile::tempdir().unwrap();
    let out = mglab(&["embed", "--secret", "111"], dir.path());
    assert!(out.status.success());
    let c = json(&out);
    assert_eq!(c["n"], 5);
    assert!(c["layers"].as_array().is_some());
}

#[test]
fn sq_query_counts() {
    let dir = tempfile::tempdir().unwrap();
    for (secret, expected) in [("111111", 2 * 64), ("000000", 2)] {
        for mode in ["exact", "adversarial", "empirical"] {
            let out = mglab(&["sq", "--n", "6", "--secret", secret, "--mode", mode, "--seed", "5"], dir.path());
            assert_eq!(out.status.code(), Some(0), "{secret} {mode}");
            let r = json(&out);
            assert_eq!(r["report"]["queries_used"], expected, "{secret} {mode}");
            assert_eq!(r["report"]["recovered"], secret);
            assert_eq!(r["report"]["success"], true);
        }
    }
}

#[test]
fn lpn_trials_are_ordered_and_job_independent() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["lpn", "--n", "6", "--eta", "0.1", "--trials", "5", "--seed", "9"];
    let one = mglab(&[&base[..], &["--jobs", "1"]].concat(), dir.path());
    let four = mglab(&[&base[..], &["--jobs", "4"]].concat(), dir.path());
    assert_eq!(one.stdout, four.stdout);
    let r = json(&one);
    assert_eq!(r["trials"].as_array().unwrap().len(), 5);
}

#[test]
fn reports_are_byte_identical_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let a = mglab(&["separation", "--n", "5", "--trials", "4", "--seed", "3", "--out", "a.json"], dir.path());
    let b = mglab(&["separation", "--n", "5", "--trials", "4", "--seed", "3", "--out", "b.json"], dir.path());
    assert!(a.status.success() && b.status.success());
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    let b = std::fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b);

    let other = mglab(&["separation", "--n", "5", "--trials", "4", "--seed", "4"], dir.path());
    assert_ne!(other.stdout, a);
}

#[test]
fn floats_carry_seventeen_digits() {
    let dir = tempfile::tempdir().unwrap();
    let out = mglab(&["lpn", "--n", "3", "--eta", "0.1", "--seed", "1"], dir.path());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"eta\": 1.0000000000000001e-1"), "{text}");
}

#[test]
fn dist_csv_export() {
    let dir = tempfile::tempdir().unwrap();
    let out = mglab(&["dist", "--kind", "even", "--k", "3"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("bitstring,probability"));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.contains(&"011,2.5000000000000000e-1"));
    assert!(rows.contains(&"001,0.0000000000000000e0"));

    let out = mglab(&["dist", "--kind", "parity"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn catalogued_queries() {
    let dir = tempfile::tempdir().unwrap();
    let out = mglab(&["query", "--secret", "110", "--family", "correlator", "--a", "110"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["answer"], serde_json::json!(1.0));
    assert_eq!(r["queries_used"], 1);

    let out = mglab(
        &["query", "--secret", "110", "--family", "indicator", "--point", "11001", "--target", "m", "--mode", "adversarial", "--tau", "0.2", "--seed", "1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["queries_used"], 2);
    assert_eq!(r["within_tolerance"], true);

    let bad: &[&[&str]] = &[
        &["query", "--secret", "110", "--family", "correlator"],
        &["query", "--secret", "110", "--family", "indicator", "--point", "11"],
        &["query", "--secret", "110", "--family", "correlator", "--a", "110", "--mode", "empirical"],
    ];
    for args in bad {
        assert_eq!(mglab(args, dir.path()).status.code(), Some(2), "{args:?}");
    }
}
