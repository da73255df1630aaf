use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fedzip::save_checkpoint;
use fedzip_core::corpus::{synthetic_array, ArrayKind};
use fedzip_core::tensor::{StateDict, TensorRecord};

fn fedzip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fedzip")).args(args).output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn noisy_model() -> StateDict {
    StateDict::from_records([
        TensorRecord::f32("conv.weight", vec![64, 128], synthetic_array(ArrayKind::Spiky, 64 * 128, 3)).unwrap(),
        TensorRecord::f32("conv.bias", vec![64], synthetic_array(ArrayKind::Spiky, 64, 4)).unwrap(),
        TensorRecord::f32("fc.weight", vec![10, 200], synthetic_array(ArrayKind::Smooth, 2000, 5)).unwrap(),
    ])
    .unwrap()
}

#[test]
fn no_arguments_prints_usage_and_exits_1() {
    let out = fedzip(&[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("Usage"), "{err}");
    assert!(err.lines().last().unwrap().contains("\"error\":\"usage\""));
}

#[test]
fn missing_input_exits_2_naming_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.fszt");
    let out = fedzip(&["compress", p(&missing), p(&dir.path().join("out.fszu"))]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "data");
    assert!(err["path"].as_str().unwrap().ends_with("missing.fszt"));
    assert!(err["message"].as_str().unwrap().contains("missing.fszt"));
}

#[test]
fn corrupt_update_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.fszu");
    fs::write(&bad, b"FSZU\x01\x00garbage").unwrap();
    let out = fedzip(&["decompress", p(&bad), p(&dir.path().join("x.fszt"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compress_decompress_analyze_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (model, update, recon, dist, report) = (
        dir.path().join("model.fszt"),
        dir.path().join("model.fszu"),
        dir.path().join("recon.fszt"),
        dir.path().join("dist.csv"),
        dir.path().join("entries.csv"),
    );
    save_checkpoint(&model, &noisy_model()).unwrap();

    let out = fedzip(&["compress", p(&model), p(&update), "--codec", "pq", "--rel-eb", "1e-2", "--report", p(&report)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(summary["ratio"].as_f64().unwrap() > 1.0);
    assert_eq!(summary["lossy_entries"], serde_json::json!(["conv.weight", "fc.weight"]));
    let entries = fs::read_to_string(&report).unwrap();
    assert_eq!(entries.lines().count(), 1 + 3 + 1);

    assert_eq!(fedzip(&["decompress", p(&update), p(&recon)]).status.code(), Some(0));

    let out = fedzip(&["analyze-error", p(&model), p(&recon), "--bins", "101", "--rel-eb", "1e-2", "--out", p(&dist)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&dist).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "bin_left,bin_right,count");
    assert_eq!(lines.len(), 1 + 101 + 1);
    let total: u64 = lines[1..102].iter().map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 64 * 128 + 2000);
    let trailer: serde_json::Value = serde_json::from_str(lines[102]).unwrap();
    let (b, eps) = (trailer["b"].as_f64().unwrap(), trailer["eps_abs"].as_f64().unwrap());
    assert!(b > 0.0 && b < eps, "b = {b}, eps = {eps}");
    assert!(trailer["goodness"].as_f64().is_some() && trailer["mu"].as_f64().is_some());

    let out = fedzip(&["analyze-error", p(&model), p(&recon), "--per-entry", "--bins", "11"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("entry,bin_left,bin_right,count\n"));
    assert_eq!(text.lines().filter(|l| l.starts_with('{')).count(), 2);
}

#[test]
fn bench_net_curve_flips_once() {
    let out = fedzip(&["bench-net", "--size-mb", "230", "--ratio", "12.61", "--tc", "2", "--td", "1", "--bw-range", "1e6:1e10", "--points", "21"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("bandwidth,time_uncompressed,time_compressed,worthwhile"));
    let flags: Vec<bool> = lines.map(|l| l.rsplit(',').next().unwrap() == "true").collect();
    assert_eq!(flags.len(), 21);
    assert!(flags[0] && !flags[20]);
    assert_eq!(flags.windows(2).filter(|w| w[0] != w[1]).count(), 1);
    let breakeven: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(breakeven["breakeven_bps"].as_f64().unwrap() > 1e8);
}

#[test]
fn sweep_then_select() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.csv");
    let out = fedzip(&["sweep", "--eps", "1e-1,1e-2,1e-3", "--rounds", "3", "--out", p(&grid)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&grid).unwrap();
    assert_eq!(text.lines().count(), 1 + 1 + 3);
    assert!(text.lines().nth(1).unwrap().starts_with("none,"));

    let out = fedzip(&["select", p(&grid), "--bw", "10e6", "--slack", "0.05"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let choice: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(choice["codec_selection"]["codec"], "pq");
    assert!(choice["epsilon_selection"]["epsilon"].as_f64().is_some());
}

#[test]
fn bench_writes_a_grid_select_can_read() {
    let dir = tempfile::tempdir().unwrap();
    let (grid, model) = (dir.path().join("grid.csv"), dir.path().join("tinynet.fszt"));
    let out = fedzip(&["bench", "--eps", "1e-1,1e-3", "--reps", "1", "--save-model", p(&model), "--out", p(&grid)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(model.exists());
    assert_eq!(fs::read_to_string(&grid).unwrap().lines().count(), 1 + 4);
    let out = fedzip(&["select", p(&grid), "--bw", "1e6", "--policy", "max-ratio"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let choice: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(choice["codec_selection"]["epsilon"], 0.1);
    assert!(choice["epsilon_selection"].is_null());
}

#[test]
fn fl_run_reports_every_round_and_client() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.jsonl");
    let out = fedzip(&["fl-run", "--clients", "3", "--rounds", "2", "--codec", "cbt", "--format", "jsonl", "--out", p(&report)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows: Vec<serde_json::Value> =
        fs::read_to_string(&report).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r["compressed_bytes"].as_u64() < r["original_bytes"].as_u64()));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["codec"], "cbt");
}

#[test]
fn invalid_values_are_usage_errors() {
    assert_eq!(fedzip(&["bench-net", "--size-mb", "1", "--ratio", "2", "--tc", "1", "--td", "1", "--bw-range", "9:1"]).status.code(), Some(1));
    assert_eq!(fedzip(&["fl-run", "--codec", "zfp"]).status.code(), Some(1));
    assert_eq!(fedzip(&["fl-run", "--rounds", "0"]).status.code(), Some(2));
}
