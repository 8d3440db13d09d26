//! Exit-code and flag behavior of the command line.

use std::path::Path;
use std::process::Command;

fn echograph() -> Command {
    Command::new(env!("CARGO_BIN_EXE_echograph"))
}

fn synth_into(dir: &Path) {
    let status = echograph()
        .args(["synth", "--seed", "3", "--n-left", "60", "--n-right", "60"])
        .args(["--out", dir.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
}

#[test]
fn unknown_flag_exits_1_with_usage() {
    let output = echograph()
        .args(["metrics", "--no-such-flag"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("Usage") || stderr.contains("usage"), "{stderr}");
}

#[test]
fn help_exits_0() {
    let output = echograph().arg("--help").output().unwrap();
    assert_eq!(output.status.code(), Some(0));
}

#[test]
fn missing_leaning_table_exits_1_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    let missing = dir.path().join("nowhere.csv");
    let output = echograph()
        .args(["polarity", "--in", dir.path().to_str().unwrap()])
        .args(["--leaning-table", missing.to_str().unwrap()])
        .args(["--out", dir.path().join("out").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("nowhere.csv"), "{stderr}");
}

#[test]
fn compare_grid_flag_evaluates_six_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    let out = dir.path().join("out");
    let status = echograph()
        .args(["compare", "--in", dir.path().to_str().unwrap()])
        .args(["--delta-grid", "0.2:0.45:0.05", "--no-bot-filter"])
        .args(["--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let detail = std::fs::read_to_string(out.join("compare_partisan_detail.csv")).unwrap();
    let pagerank_rows = detail
        .lines()
        .filter(|l| l.starts_with("pagerank,"))
        .count();
    assert_eq!(pagerank_rows, 6);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    let config = dir.path().join("run.conf");
    std::fs::write(
        &config,
        format!(
            "# run settings\nin={}\ndelta=0.25\n",
            dir.path().display()
        ),
    )
    .unwrap();

    // Config alone: summary file for delta 0.25 appears.
    let out1 = dir.path().join("out1");
    let status = echograph()
        .args(["polarity", "--config", config.to_str().unwrap()])
        .args(["--out", out1.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out1.join("summary_delta_0_25.csv").exists());

    // Flag overrides the file value.
    let out2 = dir.path().join("out2");
    let status = echograph()
        .args(["polarity", "--config", config.to_str().unwrap()])
        .args(["--delta", "0.4"])
        .args(["--out", out2.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out2.join("summary_delta_0_4.csv").exists());
    assert!(!out2.join("summary_delta_0_25.csv").exists());
}

#[test]
fn synth_then_ingest_roundtrip_counts() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    let out = dir.path().join("out");
    let status = echograph()
        .args(["ingest", "--in", dir.path().to_str().unwrap()])
        .args(["--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let report = std::fs::read_to_string(out.join("ingest_report.txt")).unwrap();
    assert!(report.contains("self_loops_dropped 0"));
    assert!(report.contains("leaning_domains 50"));

    // The canonical edge list (minus the header) matches the input.
    let original = std::fs::read_to_string(dir.path().join("edges.tsv")).unwrap();
    let canonical = std::fs::read_to_string(out.join("edges_canonical.tsv")).unwrap();
    let strip = |s: &str| {
        s.lines()
            .filter(|l| !l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&original), strip(&canonical));
}
