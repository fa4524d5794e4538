use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn chordwig(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chordwig"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path, extra: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    let body = format!(
        r#"{{
  "hbar": 1.0,
  "shell": {{"n": 2, "samples": 128}},
  "grid": {{"p_min": -1.5, "p_max": 1.5, "n_p": 7, "q_min": -1.5, "q_max": 1.5, "n_q": 7}},
  "time": {{"t_end": 0.5, "steps": 4, "flow_dt": 1e-3}},
  "pairs": [[0.3, -0.2], [0.1, 0.0]],
  "angle_grid": 32,
  "star_points": 128,
  "star_half_width": 6.0,
  "oracle": {{"criteria": [3]}}{extra}
}}"#
    );
    fs::write(&path, body).unwrap();
    path
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn every_subcommand_writes_output_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "");
    let cases = [
        ("build-wigner", "wigner.csv"),
        ("evolve", "evolution.csv"),
        ("project", "projection.csv"),
        ("diffusion", "diffusion.csv"),
        ("normalize", "normalize.csv"),
        ("oracle-compare", "report.json"),
        ("star-check", "star.csv"),
    ];
    for (cmd, file) in cases {
        let dir = tmp.path().join(cmd);
        let out = chordwig(&[cmd, "--config", cfg.to_str().unwrap()], &dir);
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(dir.join(file).is_file(), "{cmd} missing {file}");
        let m = manifest(&dir);
        assert_eq!(m["command"], cmd);
        assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
        assert_eq!(m["outputs"][0]["file"], file);
        assert!(m["conventions"]["maslov_offset"].is_number());
        assert!(m["conventions"]["purity_exponent"].is_string());
    }
}

#[test]
fn csv_bodies_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "");
    for (cmd, file) in [("build-wigner", "wigner.csv"), ("project", "projection.csv"), ("star-check", "star.csv")] {
        let (a, b) = (tmp.path().join(format!("{cmd}-a")), tmp.path().join(format!("{cmd}-b")));
        assert!(chordwig(&[cmd, "--config", cfg.to_str().unwrap()], &a).status.success());
        assert!(chordwig(&[cmd, "--config", cfg.to_str().unwrap()], &b).status.success());
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{cmd}");
        assert_eq!(manifest(&a)["outputs"][0]["sha256"], manifest(&b)["outputs"][0]["sha256"]);
    }
}

#[test]
fn harmonic_wigner_grid_has_header_and_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("h.json");
    fs::write(&cfg, r#"{"hbar": 0.05, "shell": {"n": 10}, "grid": {"n_p": 9, "n_q": 9, "p_min": -1.2, "p_max": 1.2, "q_min": -1.2, "q_max": 1.2}}"#)
        .unwrap();
    let dir = tmp.path().join("w");
    let out = chordwig(&["build-wigner", "--config", cfg.to_str().unwrap()], &dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.join("wigner.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("p,q,w,chords,caustic"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 81);
    assert!(rows.iter().all(|r| r.len() == 5 && r[2].is_finite()));
    assert_eq!(manifest(&dir)["outputs"][0]["rows"], 81);
}

#[test]
fn evolve_accepts_channel_and_time_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "");
    let dir = tmp.path().join("e");
    let out = chordwig(&["evolve", "--config", cfg.to_str().unwrap(), "--channels", "q", "--t", "1.0"], &dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&dir);
    assert_eq!(m["config"]["time"]["t_end"], 1.0);
    assert_eq!(m["config"]["channels"][0]["symbol"], "q");
    let text = fs::read_to_string(dir.join("evolution.csv")).unwrap();
    assert!(text.lines().count() > 1);
}

#[test]
fn config_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("x");

    let bad_key = tmp.path().join("bad_key.json");
    fs::write(&bad_key, r#"{"hbarr": 0.1}"#).unwrap();
    assert_eq!(chordwig(&["normalize", "--config", bad_key.to_str().unwrap()], &dir).status.code(), Some(2));

    let bad_value = tmp.path().join("bad_value.json");
    fs::write(&bad_value, r#"{"hbar": -1.0}"#).unwrap();
    assert_eq!(chordwig(&["normalize", "--config", bad_value.to_str().unwrap()], &dir).status.code(), Some(2));

    let bad_system = small_config(tmp.path(), r#", "system": {"name": "nonesuch"}"#);
    assert_eq!(chordwig(&["build-wigner", "--config", bad_system.to_str().unwrap()], &dir).status.code(), Some(2));

    assert_eq!(chordwig(&["no-such-command"], &dir).status.code(), Some(2));
    assert_eq!(chordwig(&["evolve", "--channels", "z"], &dir).status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("coarse.json");
    fs::write(&cfg, r#"{"hbar": 0.1, "star_points": 32, "star_half_width": 5.0}"#).unwrap();
    let out = chordwig(&["star-check", "--config", cfg.to_str().unwrap()], &tmp.path().join("s"));
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("aliasing"));
}
