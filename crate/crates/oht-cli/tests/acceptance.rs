//! Acceptance suite: every numbered criterion runs at its stated tolerance
//! and prints one pass/fail line. These are the same checks `oht
//! paper-suite` executes; criterion 10 additionally reruns the built binary
//! and compares its output files byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

use oht_cli::suite::{self, CheckResult, SuiteCfg};

fn full_cfg() -> SuiteCfg {
    SuiteCfg {
        quick: false,
        seed: 7,
    }
}

fn assert_check(result: CheckResult) {
    println!("{}", result.line());
    assert!(result.pass, "{}", result.detail);
}

#[test]
fn criterion_01_limit_score_identity() {
    assert_check(suite::check_1_score_identity(&full_cfg()));
}

#[test]
fn criterion_02_density_expectation_identity() {
    assert_check(suite::check_2_expectation_identity(&full_cfg()));
}

#[test]
fn criterion_03_orthant_oracles() {
    assert_check(suite::check_3_orthant_oracles(&full_cfg()));
}

#[test]
fn criterion_04_covariance_vs_sampling_oracle() {
    assert_check(suite::check_4_covariance_oracle(&full_cfg()));
}

#[test]
fn criterion_05_exponent_vs_grid_oracle() {
    assert_check(suite::check_5_exponent_brute_force(&full_cfg()));
}

#[test]
fn criterion_06_hand_computed_detection() {
    assert_check(suite::check_6_hand_detection(&full_cfg()));
}

#[test]
fn criterion_07_phase_transition() {
    assert_check(suite::check_7_phase_transition(&full_cfg()));
}

#[test]
fn criterion_08_threshold_calibration() {
    assert_check(suite::check_8_threshold_calibration(&full_cfg()));
}

#[test]
fn criterion_09_exponent_fit() {
    assert_check(suite::check_9_exponent_fit(&full_cfg()));
}

#[test]
fn criterion_10_determinism_in_process() {
    assert_check(suite::check_10_determinism(&full_cfg()));
}

fn collect_csvs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).expect("suite output dir exists") {
        let path = entry.expect("dir entry").path();
        if path.extension().is_some_and(|e| e == "csv") {
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            out.insert(name, fs::read(&path).expect("artifact readable"));
        }
    }
    out
}

#[test]
fn criterion_10_determinism_of_binary_runs() {
    let bin = env!("CARGO_BIN_EXE_oht");
    let base = tempfile::tempdir().expect("tempdir");
    let dirs = [base.path().join("run1"), base.path().join("run2")];
    for dir in &dirs {
        let status = Command::new(bin)
            .args(["paper-suite", "--quick", "--seed", "7", "--out"])
            .arg(dir)
            .status()
            .expect("binary runs");
        assert!(status.success(), "quick suite failed in {}", dir.display());
    }
    let first = collect_csvs(&dirs[0]);
    let second = collect_csvs(&dirs[1]);
    assert!(!first.is_empty(), "no CSV artifacts produced");
    assert_eq!(
        first.keys().collect::<Vec<_>>(),
        second.keys().collect::<Vec<_>>(),
        "artifact sets differ"
    );
    for (name, bytes) in &first {
        assert_eq!(bytes, &second[name], "artifact {name} differs between runs");
    }
    println!(
        "PASS criterion 10 (binary determinism): {} CSV artifacts byte-identical",
        first.len()
    );
}
