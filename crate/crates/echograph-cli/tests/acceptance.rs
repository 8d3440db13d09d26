//! Acceptance criterion 9: `synth` + `pipeline` with fixed seeds is
//! byte-identical across two runs and across thread counts 1 and 4.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

fn echograph() -> Command {
    Command::new(env!("CARGO_BIN_EXE_echograph"))
}

fn run_ok(args: &[&str]) {
    let output = echograph().args(args).output().expect("binary runs");
    assert!(
        output.status.success(),
        "echograph {args:?} failed:\n{}",
        String::from_utf8_lossy(&output.stderr)
    );
}

/// Map of file name to raw contents for a flat output directory.
fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).expect("output dir exists") {
        let entry = entry.unwrap();
        let name = entry.file_name().into_string().unwrap();
        files.insert(name, std::fs::read(entry.path()).unwrap());
    }
    files
}

fn assert_identical(a: &Path, b: &Path, what: &str) {
    let fa = dir_contents(a);
    let fb = dir_contents(b);
    let names_a: Vec<&String> = fa.keys().collect();
    let names_b: Vec<&String> = fb.keys().collect();
    assert_eq!(names_a, names_b, "{what}: file sets differ");
    for (name, bytes) in &fa {
        assert_eq!(
            bytes, &fb[name],
            "{what}: {name} differs between {} and {}",
            a.display(),
            b.display()
        );
    }
}

#[test]
fn criterion_9_end_to_end_determinism() {
    let root = tempfile::tempdir().unwrap();
    let path = |name: &str| root.path().join(name);
    let arg = |p: &Path| p.to_str().unwrap().to_owned();

    let synth_args = |out: &Path| {
        vec![
            "synth".to_owned(),
            "--seed".to_owned(),
            "7".to_owned(),
            "--gatekeeper-fraction".to_owned(),
            "0.1".to_owned(),
            "--p-in".to_owned(),
            "0.08".to_owned(),
            "--out".to_owned(),
            arg(out),
        ]
    };

    let data_a = path("data_a");
    let data_b = path("data_b");
    for dir in [&data_a, &data_b] {
        let args: Vec<String> = synth_args(dir);
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        run_ok(&refs);
    }
    assert_identical(&data_a, &data_b, "synth reruns");

    let pipeline_args = |out: &Path, threads: &str| {
        vec![
            "pipeline".to_owned(),
            "--in".to_owned(),
            arg(&data_a),
            "--delta".to_owned(),
            "0.3".to_owned(),
            "--seed".to_owned(),
            "11".to_owned(),
            "--trees".to_owned(),
            "40".to_owned(),
            "--vocab-cap".to_owned(),
            "1000".to_owned(),
            "--threads".to_owned(),
            threads.to_owned(),
            "--out".to_owned(),
            arg(out),
        ]
    };

    let run_1 = path("run_t1_a");
    let run_2 = path("run_t1_b");
    let run_4 = path("run_t4");
    for (dir, threads) in [(&run_1, "1"), (&run_2, "1"), (&run_4, "4")] {
        let args = pipeline_args(dir, threads);
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        run_ok(&refs);
    }
    assert_identical(&run_1, &run_2, "pipeline reruns at one thread");
    assert_identical(&run_1, &run_4, "pipeline across thread counts 1 and 4");

    // The full report set came out.
    let files = dir_contents(&run_1);
    for expected in [
        "edges_canonical.tsv",
        "ingest_report.txt",
        "metrics.csv",
        "summary_delta_0_3.csv",
        "compare_partisan.csv",
        "compare_gatekeeper.csv",
        "scatter.csv",
        "predict_report.txt",
    ] {
        assert!(files.contains_key(expected), "missing {expected}");
    }
    for (name, bytes) in &files {
        assert!(
            bytes.starts_with(b"# config "),
            "{name} lacks the config-hash header"
        );
    }

    println!(
        "[PASS] criterion 9 (end-to-end determinism): synth + pipeline byte-identical across reruns and thread counts 1/4 ({} output files)",
        files.len()
    );
}
