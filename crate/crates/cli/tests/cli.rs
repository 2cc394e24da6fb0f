use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn sllab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sllab")).args(args).env_remove("SLLAB_THREADS").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

#[test]
fn free_packet_run_writes_checksummed_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let cfg = configs().join("free_packet.json");
    let o = sllab(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("status: PASS"));

    let summary: Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let width = summary["metrics"]["width"].as_f64().unwrap();
    assert!((width - 2f64.sqrt()).abs() < 1e-3 * 2f64.sqrt(), "{width}");

    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let names: Vec<&str> = manifest["outputs"].as_array().unwrap().iter().map(|f| f["path"].as_str().unwrap()).collect();
    for expected in ["summary.json", "width.csv", "density.svg", "snapshots.slf1"] {
        assert!(names.contains(&expected), "{names:?}");
    }
    assert!(!names.contains(&"manifest.json"));

    let r = sllab(&["report", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0));
    assert!(stdout(&r).contains("checksums: ok"));

    std::fs::write(out.join("width.csv"), "tampered\n").unwrap();
    let r = sllab(&["report", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(4));
    assert!(stderr(&r).contains("width.csv"));
}

#[test]
fn contextuality_reports_the_pr_box() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"experiment": "contextuality", "params": {"models": ["pr_box"]}}"#);
    let out = tmp.path().join("out");
    let o = sllab(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("pr_box: strongly contextual, CF = 1.0, CHSH = 4.0"), "{}", stdout(&o));
    assert!(out.join("analysis.json").exists());
}

#[test]
fn unknown_parameter_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.json", r#"{"experiment": "free_packet", "params": {"widht": 1.0}}"#);
    let o = sllab(&["run", cfg.to_str().unwrap(), "--out", tmp.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("widht"), "{}", stderr(&o));
    assert!(!tmp.path().join("x").exists());
}

#[test]
fn unknown_experiment_and_bad_json_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "a.json", r#"{"experiment": "teleport"}"#);
    let o = sllab(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("teleport"));
    let cfg = write_config(tmp.path(), "b.json", "{ not json");
    assert_eq!(sllab(&["validate", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn stochastic_experiment_needs_a_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "n.json", r#"{"experiment": "nelson_born"}"#);
    let o = sllab(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("seed"));
    let o = sllab(&["validate", cfg.to_str().unwrap(), "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn bundled_configs_validate() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let o = sllab(&["validate", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}: {}", path.display(), stderr(&o));
    }
}

#[test]
fn fixtures_are_listed_and_shown() {
    let o = sllab(&["fixtures", "list"]);
    assert_eq!(o.status.code(), Some(0));
    for name in ["pr_box", "singlet_chsh", "hardy", "classical_correlated"] {
        assert!(stdout(&o).contains(name));
    }
    let o = sllab(&["fixtures", "show", "pr_box"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["name"], "pr_box");
    assert_eq!(sllab(&["fixtures", "show", "nope"]).status.code(), Some(2));
}

#[test]
fn zero_threads_is_rejected() {
    let o = sllab(&["--threads", "0", "fixtures", "list"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn report_on_missing_directory_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let o = sllab(&["report", tmp.path().join("none").to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
}
