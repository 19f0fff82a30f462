use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn repcount(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_repcount"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn synth_dataset(dir: &Path, spec: &str) -> String {
    let spec_path = dir.join("spec.txt");
    fs::write(&spec_path, spec).unwrap();
    let out = dir.join("data");
    let o = repcount(&["synth", spec_path.to_str().unwrap(), out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out.join("manifest.csv").to_str().unwrap().to_string()
}

#[test]
fn synth_writes_series_sidecars_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth_dataset(dir.path(), "base_cycle=16\ncycles=10\nsequences=2\nseed=3\n");
    let data = dir.path().join("data");
    assert_eq!(
        fs::read_to_string(&manifest).unwrap(),
        "synthetic,test\nsynth-3.csv,synth-3.ann\nsynth-4.csv,synth-4.ann\n"
    );
    let gt = fs::read_to_string(data.join("synth-3.gt")).unwrap();
    assert!(gt.starts_with("synth-3,10\n1\n17\n"));
    assert!(gt.ends_with("161\n"));
    let series = fs::read_to_string(data.join("synth-3.csv")).unwrap();
    assert!(series.starts_with("synth-3,25,1\n"));
    assert_eq!(series.lines().count(), 161);
}

#[test]
fn count_prints_the_count_and_writes_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    synth_dataset(dir.path(), "base_cycle=16\ncycles=32\n");
    let series = dir.path().join("data/synth-0.csv");
    let trace = dir.path().join("trace.csv");
    let o = repcount(&["count", series.to_str().unwrap(), "--trace", trace.to_str().unwrap()]);
    assert!(o.status.success());
    let c: f64 = stdout(&o).trim().parse().unwrap();
    assert!((c - 32.0).abs() <= 1.0, "{c}");
    let trace = fs::read_to_string(trace).unwrap();
    assert!(trace.starts_with("stage,position,tp,tn,confidence\n"));
    assert_eq!(trace.lines().count(), 1 + 1 + 4 + 8 + 8 + 8 + 16);
}

#[test]
fn count_with_a_replay_table() {
    let dir = tempfile::tempdir().unwrap();
    synth_dataset(dir.path(), "base_cycle=16\ncycles=32\n");
    let table = dir.path().join("table.csv");
    fs::write(&table, "256,16,16\n").unwrap();
    let series = dir.path().join("data/synth-0.csv");
    let o = repcount(&["count", series.to_str().unwrap(), "--replay", table.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "32.000000");
}

#[test]
fn binary_series_count_like_text() {
    let dir = tempfile::tempdir().unwrap();
    synth_dataset(dir.path(), "base_cycle=20\ncycles=12\nformat=binary\nnoise_std=0.1\n");
    let series = dir.path().join("data/synth-0.bin");
    let o = repcount(&["count", series.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let c: f64 = stdout(&o).trim().parse().unwrap();
    assert!((c - 12.0).abs() <= 1.0, "{c}");
}

#[test]
fn eval_reports_are_identical_serial_and_parallel() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth_dataset(dir.path(), "suite=nonstationary\nsequences=6\nseed=2\n");
    let a = repcount(&["eval", &manifest, "--serial"]);
    let b = repcount(&["eval", &manifest]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    let report = stdout(&a);
    assert!(report.contains("id,truth,predicted,abs_rel_error,off_by_one,status"));
    assert_eq!(report.lines().filter(|l| l.ends_with(",ok")).count(), 6);
}

#[test]
fn eval_writes_to_a_file_with_the_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth_dataset(dir.path(), "suite=clean\nsequences=3\n");
    let out = dir.path().join("report.csv");
    let o = repcount(&[
        "eval",
        &manifest,
        "--estimator",
        "oracle",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let report = fs::read_to_string(out).unwrap();
    assert!(report.contains("# estimator=oracle"));
    assert!(report.contains("oboa=1"));
}

#[test]
fn speed_prints_one_row_per_factor() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth_dataset(dir.path(), "base_cycle=32\ncycles=10\nsequences=2\n");
    let o = repcount(&["speed", &manifest, "--factors", "1,2,4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = stdout(&o);
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows[0], "factor,sequences,failed,mae,mae_std,oboa");
    assert!(rows[1].starts_with("1,2,0,") && rows[2].starts_with("2,2,0,") && rows[3].starts_with("4,2,0,"));
}

#[test]
fn config_file_and_flags_are_applied() {
    let dir = tempfile::tempdir().unwrap();
    synth_dataset(dir.path(), "base_cycle=16\ncycles=32\n");
    let cfg = dir.path().join("cfg.txt");
    fs::write(&cfg, "# three stages\nK=3\nrefine_schedule=2,2,1\n").unwrap();
    let series = dir.path().join("data/synth-0.csv");
    let trace = dir.path().join("t.csv");
    let o = repcount(&[
        "count",
        series.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "search_scales=10",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    // 1 search row, 2 + 2*2 + 1*4 refinement rows
    assert_eq!(fs::read_to_string(trace).unwrap().lines().count(), 1 + 1 + 2 + 4 + 4);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(repcount(&[]).status.code(), Some(1));
    assert_eq!(repcount(&["count"]).status.code(), Some(1));
    assert_eq!(repcount(&["--help"]).status.code(), Some(0));

    let missing = dir.path().join("missing.csv");
    assert_eq!(repcount(&["count", missing.to_str().unwrap()]).status.code(), Some(2));

    let broken = dir.path().join("broken.csv");
    fs::write(&broken, "x,25,2\n1,2\n3\n").unwrap();
    let o = repcount(&["count", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains(":3:"));

    let flat = dir.path().join("flat.csv");
    fs::write(&flat, format!("flat,25,1\n{}", "0.5\n".repeat(64))).unwrap();
    assert_eq!(repcount(&["count", flat.to_str().unwrap()]).status.code(), Some(3));

    let series = dir.path().join("ok.csv");
    fs::write(&series, format!("ok,25,1\n{}", "0\n1\n2\n1\n".repeat(16))).unwrap();
    assert_eq!(
        repcount(&["count", series.to_str().unwrap(), "--set", "beta=2"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        repcount(&["count", series.to_str().unwrap(), "--set", "nonsense"])
            .status
            .code(),
        Some(1)
    );

    let empty = dir.path().join("manifest.csv");
    fs::write(&empty, "demo,test\n").unwrap();
    assert_eq!(repcount(&["eval", empty.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(
        repcount(&["eval", empty.to_str().unwrap(), "--estimator", "magic"])
            .status
            .code(),
        Some(1)
    );
}
