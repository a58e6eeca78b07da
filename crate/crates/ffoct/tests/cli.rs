//! Black-box checks of the command-line contract: exit codes, schema
//! messages, provenance hashing and dataset round trips.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ffoct_cli_{tag}_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ffoct")).args(args).current_dir(cwd).output().unwrap()
}

const BLOB_CFG: &str = r#"{
  "phantom": {
    "kind": "gaussian-blobs",
    "centers": [[0.0, 0.0, 3.0]],
    "widths": [0.6],
    "amplitudes": [0.0]
  },
  "pulse": {"kind": "gaussian-windowed-cosine", "center_freq": 4.0, "bandwidth": 2.0},
  "geometry": {
    "d": 400.0, "r_max": 16.0, "delta": 4.0,
    "mirror_spacing": 1.0, "n_mirrors": 32,
    "directions_per_axis": 3, "max_slope": 0.25,
    "polarization": [1.0, 0.0, 0.0]
  }
}"#;

#[test]
fn schema_violation_exits_2_naming_the_field() {
    let dir = workdir("schema");
    std::fs::write(dir.join("bad.json"), r#"{"speed": 2.0}"#).unwrap();
    let out = run(&["phantom", "--config", "bad.json", "--out", "p"], &dir);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("speed"), "stderr must name the offending field: {msg}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn layered_bin_width_violation_exits_2_citing_the_constraint() {
    let dir = workdir("layered_t");
    std::fs::write(
        dir.join("cfg.json"),
        r#"{"phantom": {"kind": "layered", "boundaries": [2.0, 1.5, 0.0],
             "chi": [0.4, 0.8], "t_support": 1.2}}"#,
    )
    .unwrap();
    let out = run(&["phantom", "--config", "cfg.json", "--out", "p"], &dir);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("t_support"), "stderr must cite the violated field: {msg}");
    assert!(msg.contains("thickness"), "stderr must cite the constraint: {msg}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn zero_phantom_simulates_to_all_zero_values() {
    let dir = workdir("zero");
    std::fs::write(dir.join("cfg.json"), BLOB_CFG).unwrap();
    let out = run(&["simulate", "--config", "cfg.json", "--out", "m"], &dir);
    assert!(out.status.success());
    let reader = ffoct::dataset::DatasetReader::open(&dir.join("m")).unwrap();
    let (_, values) = reader.read_f64("values").unwrap();
    assert!(!values.is_empty());
    assert!(values.iter().all(|&v| v == 0.0), "zero-amplitude phantom must measure zero");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn provenance_hash_tracks_config_changes() {
    let dir = workdir("hash");
    std::fs::write(dir.join("a.json"), BLOB_CFG).unwrap();
    std::fs::write(dir.join("b.json"), BLOB_CFG.replace("\"bandwidth\": 2.0", "\"bandwidth\": 2.5")).unwrap();
    assert!(run(&["phantom", "--config", "a.json", "--out", "pa"], &dir).status.success());
    assert!(run(&["phantom", "--config", "b.json", "--out", "pb"], &dir).status.success());
    let read_hash = |p: &str| -> String {
        let manifest: serde_json::Value =
            serde_json::from_slice(&std::fs::read(dir.join(p).join("manifest.json")).unwrap())
                .unwrap();
        manifest["config_hash"].as_str().unwrap().to_string()
    };
    let (ha, hb) = (read_hash("pa"), read_hash("pb"));
    assert_eq!(ha.len(), 64);
    assert_ne!(ha, hb, "changing any config field must change the provenance hash");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn mode_mismatch_exits_3() {
    let dir = workdir("mismatch");
    let cfg = BLOB_CFG.replacen(
        "{\n  \"phantom\"",
        "{\n  \"reconstruct\": {\"mode\": \"cone\", \"cone\": {\"n\": 8, \"spacing\": 0.5, \"origin\": [-2.0, -2.0, 0.0]}},\n  \"phantom\"",
        1,
    );
    std::fs::write(dir.join("cfg.json"), &cfg).unwrap();
    // a layered trace dataset is not a measurement dataset
    std::fs::write(
        dir.join("lay.json"),
        r#"{"phantom": {"kind": "layered", "boundaries": [8.0, 0.0], "chi": [0.4], "t_support": 2.0}}"#,
    )
    .unwrap();
    assert!(run(&["simulate", "--config", "lay.json", "--out", "tr"], &dir).status.success());
    let out = run(&["reconstruct", "--config", "cfg.json", "--input", "tr", "--out", "r"], &dir);
    assert_eq!(out.status.code(), Some(3));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn phantom_dataset_round_trips_bit_exactly() {
    let dir = workdir("roundtrip");
    std::fs::write(dir.join("cfg.json"), BLOB_CFG).unwrap();
    assert!(run(&["phantom", "--config", "cfg.json", "--out", "p"], &dir).status.success());
    let reader = ffoct::dataset::DatasetReader::open(&dir.join("p")).unwrap();
    let (shape, centers) = reader.read_f64("centers").unwrap();
    assert_eq!(shape, vec![1, 3]);
    assert_eq!(
        centers.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        [0.0f64, 0.0, 3.0].iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );
    let (_, widths) = reader.read_f64("widths").unwrap();
    assert_eq!(widths[0].to_bits(), 0.6f64.to_bits());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn validate_subcommand_passes_and_reports_slope() {
    let out = run(&["validate"], &std::env::temp_dir());
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("far-field-convergence"), "{text}");
    assert!(!text.contains("FAIL"), "{text}");
}
