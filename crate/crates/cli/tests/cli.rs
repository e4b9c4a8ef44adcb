//! End-to-end tests of the `tm-pmbm` binary: exit codes, output files, and
//! byte-level determinism of the deterministic CSV columns.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tm-pmbm"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tm_pmbm_cli_{tag}_{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

const SMALL_CONFIG: &str = r#"
[scenario]
kind = "scenario1"
horizon = 36

[sweep]
window_lengths = [7]
full_detect_probs = [0.7]
clutter_rates = [2.0]

[run]
runs = 1
seed = 7
"#;

/// Drop the wall-clock column from results.csv so byte comparisons target the
/// deterministic content.
fn results_without_timing(path: &Path) -> String {
    let text = fs::read_to_string(path).unwrap();
    text.lines()
        .map(|line| {
            let fields: Vec<&str> = line.split(',').collect();
            fields[..fields.len() - 1].join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn run_writes_four_csv_files() {
    let dir = temp_dir("four_files");
    let config = dir.join("exp.toml");
    fs::write(&config, SMALL_CONFIG).unwrap();
    let out = dir.join("results");

    let status = binary()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    for name in ["results.csv", "summary.csv", "hypotheses.csv", "timing.csv"] {
        assert!(out.join(name).exists(), "missing {name}");
    }
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = temp_dir("determinism");
    let config = dir.join("exp.toml");
    fs::write(&config, SMALL_CONFIG).unwrap();

    let mut outputs = Vec::new();
    for tag in ["a", "b"] {
        let out = dir.join(tag);
        let status = binary()
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .args(["--runs", "1", "--seed", "7"])
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(out);
    }

    assert_eq!(
        fs::read(outputs[0].join("summary.csv")).unwrap(),
        fs::read(outputs[1].join("summary.csv")).unwrap()
    );
    assert_eq!(
        fs::read(outputs[0].join("hypotheses.csv")).unwrap(),
        fs::read(outputs[1].join("hypotheses.csv")).unwrap()
    );
    assert_eq!(
        results_without_timing(&outputs[0].join("results.csv")),
        results_without_timing(&outputs[1].join("results.csv"))
    );
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn filter_subset_flag_limits_rows() {
    let dir = temp_dir("filters");
    let config = dir.join("exp.toml");
    fs::write(&config, SMALL_CONFIG).unwrap();
    let out = dir.join("out");

    let status = binary()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .args(["--filters", "tm-pmbm,pmbm"])
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(text.lines().skip(1).all(|l| {
        l.starts_with("tm-pmbm,") || l.starts_with("pmbm,")
    }));
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn missing_config_exits_with_usage_error() {
    let status = binary()
        .args(["run", "--config", "/nonexistent/definitely_missing.toml", "--out", "/tmp/x"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn bad_config_reports_line_diagnostic() {
    let dir = temp_dir("bad_config");
    let config = dir.join("exp.toml");
    fs::write(&config, "[scenario]\nkind = scenario1\n").unwrap();
    let output = binary()
        .args(["run", "--config"])
        .arg(&config)
        .args(["--out", "/tmp/x"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("line"), "no line diagnostic: {stderr}");
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn validate_subcommand_passes_and_fault_injection_fails() {
    let output = binary().arg("validate").output().unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    for suite in [
        "murty-bruteforce",
        "gospa-bruteforce",
        "kalman-equivalence",
        "normalization-properties",
    ] {
        assert!(stdout.contains(suite), "missing suite {suite}: {stdout}");
    }

    // --validate flag is an alias.
    let status = binary().arg("--validate").status().unwrap();
    assert!(status.success());

    let status = binary()
        .args(["validate", "--inject-fault"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}
