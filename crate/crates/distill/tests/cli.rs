//! End-to-end checks of the binary: exit codes, report fields, artifact
//! determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_distill")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary should run")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn verify_table2_exits_zero() {
    let out = run(&[
        "verify",
        "--seq",
        fixture("t15_table2.seq").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("sufficient=true"));
    assert!(text.contains("necessary_count=17"));
    assert!(text.contains("necessary_total=17"));
}

#[test]
fn verify_insufficient_sequence_exits_one() {
    let dir = std::env::temp_dir();
    let path = dir.join("distill_cli_insufficient.seq");
    let full = std::fs::read_to_string(fixture("t15_table2.seq")).unwrap();
    // Drop the final line to break sufficiency.
    let trimmed: Vec<&str> = full.trim_end().lines().collect();
    std::fs::write(&path, trimmed[..trimmed.len() - 1].join("\n")).unwrap();
    let out = run(&["verify", "--seq", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("sufficient=false"));
}

#[test]
fn malformed_file_exits_two() {
    let dir = std::env::temp_dir();
    let path = dir.join("distill_cli_malformed.seq");
    std::fs::write(&path, "code t15\nZ 3 7 8 99\n").unwrap();
    let out = run(&["verify", "--seq", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn ccz_verify_table3_passes() {
    let out = run(&[
        "ccz-verify",
        "--seq",
        fixture("ccz_table3.seq").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("pass=true"));
}

#[test]
fn analyze_matches_hand_value() {
    let out = run(&["analyze", "--p", "7e-4", "--d0", "5", "--levels", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("d,p_L,p_M,omega"));
    let second_level = lines.nth(1).unwrap();
    let p_m: f64 = second_level.split(',').nth(2).unwrap().parse().unwrap();
    assert!((p_m - 3.22e-4).abs() / 3.22e-4 < 1e-3, "p_M(15) = {p_m}");
}

#[test]
fn analyze_rejects_bad_domain() {
    let out = run(&["analyze", "--p", "7e-4", "--d0", "4", "--levels", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cost_table_lists_preparations() {
    let out = run(&["cost", "--d", "9"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("|T> preparation,243,135,0,135,-,32805"));
    assert!(text.contains("|CCZ> preparation"));
}

#[test]
fn search_artifacts_are_reproducible() {
    let dir = std::env::temp_dir();
    let csv_a = dir.join("distill_cli_search_a.csv");
    let csv_b = dir.join("distill_cli_search_b.csv");
    for csv in [&csv_a, &csv_b] {
        let out = run(&[
            "search",
            "--profile",
            "span-std17",
            "--samples",
            "200000",
            "--seed",
            "9",
            "--csv",
            csv.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let a = std::fs::read(&csv_a).unwrap();
    let b = std::fs::read(&csv_b).unwrap();
    assert_eq!(a, b, "identical config must give byte-identical artifacts");
}

#[test]
fn ccz_verify_all_orders_passes() {
    let out = run(&[
        "ccz-verify",
        "--seq",
        fixture("ccz_table3.seq").to_str().unwrap(),
        "--all-orders",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("orders_checked=40321"));
}

#[test]
fn analyze_output_is_deterministic() {
    let a = run(&["analyze", "--p", "1e-3", "--d0", "7", "--levels", "5"]);
    let b = run(&["analyze", "--p", "1e-3", "--d0", "7", "--levels", "5"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn raw_profile_samples_are_rejected_at_load() {
    let out = run(&[
        "search",
        "--profile",
        "raw-any17",
        "--samples",
        "100000",
        "--seed",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("hits=0"));
}

#[test]
fn relations_pass() {
    let out = run(&["relations"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("all_pass=true"));
}

#[test]
fn crossval_table3_passes() {
    let out = run(&[
        "crossval",
        "--seq",
        fixture("ccz_table3.seq").to_str().unwrap(),
        "--seed",
        "5",
        "--frames",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("disagreements=0"));
}
