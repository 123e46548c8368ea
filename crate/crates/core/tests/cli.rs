use std::path::PathBuf;
use std::process::{Command, Output};

use seqchain::approximator::{build_basic, PiecewiseChain};
use seqchain::ObservedSequence;

fn data(name: &str) -> String {
    format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn seqchain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seqchain"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("seqchain-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn stats_prints_occupancy_and_matrix() {
    let out = seqchain(&["stats", &data("f1.txt")]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("a\t4\t5.0000000000000000e-1"));
    assert!(text.contains("a\t7.5000000000000000e-1\t2.5000000000000000e-1"));
}

#[test]
fn partition_splits_f1() {
    let out = seqchain(&["partition", "--a", "1", &data("f1.txt")]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("{a}") && text.contains("{b}"), "{text}");
}

#[test]
fn verify_basic_passes_on_two_blocks() {
    let report = scratch("remark1.txt");
    let out = seqchain(&[
        "verify-basic",
        "--epsilon",
        "0.1",
        "--delta",
        "0.1",
        "--zeta",
        "0.1",
        "--trials",
        "2000",
        "--seed",
        "7",
        &data("remark1_M1000.txt"),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(report).unwrap();
    assert!(text.contains("[occupancy.deviations]"));
    assert!(text.contains("pass: true"));
}

#[test]
fn failed_verification_exits_one_and_writes_report() {
    let report = scratch("pairs.txt");
    let out = seqchain(&[
        "verify-basic",
        "--epsilon",
        "0.01",
        "--delta",
        "0.15",
        "--zeta",
        "2",
        "--trials",
        "200",
        &data("pairs.txt"),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(std::fs::read_to_string(report).unwrap().contains("pass: false"));
}

#[test]
fn bad_input_exits_two() {
    assert_eq!(seqchain(&["stats", "/nonexistent/seq.txt"]).status.code(), Some(2));
    let out = seqchain(&[
        "verify-basic",
        "--epsilon",
        "1.5",
        "--delta",
        "0.1",
        "--zeta",
        "0.1",
        &data("f1.txt"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(seqchain(&["partition", &data("f1.txt")]).status.code(), Some(2));
    assert_eq!(seqchain(&["--help"]).status.code(), Some(0));
}

#[test]
fn json_reports_are_byte_identical() {
    let args = [
        "--json",
        "thm3",
        &data("f3.txt"),
        "--n",
        "400",
        "--epsilon",
        "0.3",
        "--start",
        "a",
        "--trials",
        "300",
        "--seed",
        "5",
    ];
    let first = seqchain(&args);
    let second = seqchain(&args);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    assert_eq!(first.stdout, second.stdout);
    let value: serde_json::Value = serde_json::from_slice(&first.stdout).unwrap();
    assert!(value.is_object());
}

#[test]
fn built_chain_round_trips() {
    let chain_path = scratch("chain.txt");
    let out = seqchain(&[
        "build",
        "--epsilon",
        "0.1",
        "--delta",
        "0.1",
        &data("remark1_M1000.txt"),
        "--out",
        chain_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&chain_path).unwrap();
    let reloaded = PiecewiseChain::parse(&text).unwrap();

    let x = ObservedSequence::parse(&std::fs::read_to_string(data("remark1_M1000.txt")).unwrap()).unwrap();
    let built = build_basic(&x, 0.1).unwrap().chain;
    assert_eq!(reloaded, built);
    assert_eq!(PiecewiseChain::parse(&built.to_text()).unwrap(), built);

    let sim = seqchain(&["simulate", chain_path.to_str().unwrap(), "--seed", "3", "--trials", "2"]);
    assert_eq!(sim.status.code(), Some(0));
}
