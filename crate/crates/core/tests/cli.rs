use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn spikeres(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spikeres"))
        .args(args)
        .output()
        .unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn generate(dir: &Path, points: &str) {
    let out = spikeres(&[
        "generate",
        "--points",
        points,
        "--seed",
        "7",
        "--out",
        p(dir),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn generate_writes_dataset_files() {
    let tmp = tempfile::tempdir().unwrap();
    generate(tmp.path(), "300");
    for f in [
        "madelon.data",
        "madelon.labels",
        "madelon.meta",
        "generate_manifest.json",
    ] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
    let labels = fs::read_to_string(tmp.path().join("madelon.labels")).unwrap();
    assert_eq!(labels.lines().count(), 300);
    let first = fs::read_to_string(tmp.path().join("madelon.data")).unwrap();
    assert_eq!(
        first.lines().next().unwrap().split_whitespace().count(),
        500
    );
}

#[test]
fn generate_is_byte_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    generate(a.path(), "40");
    generate(b.path(), "40");
    for f in [
        "madelon.data",
        "madelon.labels",
        "madelon.meta",
        "generate_manifest.json",
    ] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap()
        );
    }
}

#[test]
fn zero_points_is_a_parameter_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = spikeres(&["generate", "--points", "0", "--out", p(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(spikeres(&["run", "--bogus"]).status.code(), Some(2));
}

#[test]
fn missing_input_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = spikeres(&[
        "run",
        "--input",
        p(&tmp.path().join("nope")),
        "--out",
        p(tmp.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn non_finite_drive_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("x.data");
    let labels = tmp.path().join("x.labels");
    fs::write(
        &data,
        format!("{}\n1 2 3 4 5 6 7 8\n", ["1e308"; 8].join(" ")),
    )
    .unwrap();
    fs::write(&labels, "1\n-1\n").unwrap();
    let out = spikeres(&[
        "run",
        "--data",
        p(&data),
        "--labels",
        p(&labels),
        "--no-standardize",
        "--nv",
        "4",
        "--mask-dist",
        "uniform01",
        "--out",
        p(&tmp.path().join("o")),
    ]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn run_manifest_reports_total_time() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let run = tmp.path().join("run");
    generate(&data, "20");
    let out = spikeres(&["run", "--input", p(&data), "--nv", "64", "--out", p(&run)]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("run_manifest.json")).unwrap()).unwrap();
    let total = m["total_simulated_time_s"].as_f64().unwrap();
    let expect = 20.0 * (64.0 + 8.0) * 250e-12;
    assert!((total - expect).abs() < 1e-18, "{total} vs {expect}");
    let raster = fs::read_to_string(run.join("raster.csv")).unwrap();
    assert_eq!(raster.lines().count(), 20);
    assert!(raster.lines().all(|l| l.split(',').count() == 64));
}

#[test]
fn one_node_one_point() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("x.data");
    let labels = tmp.path().join("x.labels");
    fs::write(&data, "0.5 1.5\n").unwrap();
    fs::write(&labels, "1\n").unwrap();
    let out = spikeres(&[
        "run",
        "--data",
        p(&data),
        "--labels",
        p(&labels),
        "--no-standardize",
        "--nv",
        "1",
        "--threshold",
        "0.5",
        "--out",
        p(&tmp.path().join("o")),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let raster = fs::read_to_string(tmp.path().join("o/raster.csv")).unwrap();
    assert_eq!(raster.lines().count(), 1);
    assert_eq!(raster.trim().split(',').count(), 1);
}

#[test]
fn load_rejects_mismatched_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("m.data");
    let labels = tmp.path().join("m.labels");
    fs::write(&data, "1 2\n3 4\n").unwrap();
    fs::write(&labels, "1\n").unwrap();
    let out = spikeres(&[
        "load",
        "--data",
        p(&data),
        "--labels",
        p(&labels),
        "--out",
        p(tmp.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_sweep_report_and_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let run = tmp.path().join("run");
    generate(&data, "60");
    let cfg = tmp.path().join("exp.toml");
    fs::write(
        &cfg,
        "seed = 5\n[encoding]\nn_v = 96\n[training]\nrepeats = 3\nn_n = 4\n",
    )
    .unwrap();
    let ok = |args: &[&str]| {
        let out = spikeres(args);
        assert!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    };
    ok(&[
        "run",
        "--config",
        p(&cfg),
        "--input",
        p(&data),
        "--out",
        p(&run),
    ]);
    let raster = fs::read_to_string(run.join("raster.csv")).unwrap();
    assert_eq!(raster.lines().next().unwrap().split(',').count(), 96);

    // Flags override the file.
    ok(&[
        "eval",
        "--config",
        p(&cfg),
        "--input",
        p(&run),
        "--method",
        "significance",
        "--nt",
        "15",
        "--nn",
        "20",
        "--out",
        p(&run),
    ]);
    let r: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("eval_significance.json")).unwrap())
            .unwrap();
    assert_eq!(r["n_n"], 20);
    assert_eq!(r["repeats"], 3);
    let text = fs::read_to_string(run.join("confusion_significance.txt")).unwrap();
    assert!(text.contains("pred -1") && text.contains("true +1"));

    ok(&[
        "sweep",
        "--input",
        p(&run),
        "--method",
        "both",
        "--nt",
        "5,10",
        "--nn",
        "1..8",
        "--repeats",
        "2",
        "--out",
        p(&run),
    ]);
    let cells = fs::read_to_string(run.join("sweep_significance_cells.csv")).unwrap();
    assert_eq!(cells.lines().count(), 1 + 2 * 8);
    assert!(run.join("sweep_ols.csv").exists());

    ok(&["report", "--input", p(&run), "--out", p(&run)]);
    let map: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("temporal_map.json")).unwrap()).unwrap();
    assert_eq!(map["boundary"], 30);
    for f in [
        "temporal_map.csv",
        "significance_table.csv",
        "significance_weights.csv",
        "summary.txt",
    ] {
        assert!(run.join(f).exists(), "{f}");
    }
}

#[test]
fn mismatched_raster_labels_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("raster.csv"), "0,1\n1,0\n1,1\n").unwrap();
    fs::write(tmp.path().join("raster.labels"), "1\n-1\n").unwrap();
    let out = spikeres(&["eval", "--input", p(tmp.path()), "--out", p(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
}
