use std::path::Path;
use std::process::{Command, Output};

use cauchy_stokes_cli::{Config, RunManifest};

const BIN: &str = env!("CARGO_BIN_EXE_cauchy-stokes");

fn call(dir: &Path, args: &[&str], cfg: &str) -> Output {
    let path = dir.join("run.cfg");
    std::fs::write(&path, cfg).unwrap();
    Command::new(BIN)
        .args(args)
        .arg("--config")
        .arg(&path)
        .env_remove("CAUCHY_STOKES_THREADS")
        .current_dir(dir)
        .output()
        .unwrap()
}

const MS0: &str = "case.name = MS0\ngrid.n = 16\neps.list = 1e-2, 1e-4\noutput.dir = out\n";

#[test]
fn ms0_qr_is_zero_and_passes() {
    let t = tempfile::tempdir().unwrap();
    let o = call(t.path(), &["qr"], MS0);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for k in 0..2 {
        let csv = std::fs::read_to_string(t.path().join(format!("out/qr_{k}_velocity.csv"))).unwrap();
        for line in csv.lines().skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            assert_eq!(f[4].parse::<f64>().unwrap(), 0.0);
            assert_eq!(f[5].parse::<f64>().unwrap(), 0.0);
        }
    }
    let m = RunManifest::load(&t.path().join("out")).unwrap();
    assert!(m.passed);
    assert_eq!(m.artifacts.len(), 5);
    assert!(m.verify(&t.path().join("out")).is_empty());
    assert_eq!(m.config["case.name"], "MS0");
}

#[test]
fn unknown_command_prints_usage() {
    let t = tempfile::tempdir().unwrap();
    let o = call(t.path(), &["solve-everything"], MS0);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage:"));
}

#[test]
fn config_errors_exit_one_with_line() {
    let t = tempfile::tempdir().unwrap();
    let o = call(t.path(), &["qr"], "grid.n = 16\ngrid.size = 3\n");
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2") && err.contains("grid.size"), "{err}");
    let o = call(t.path(), &["study-conv"], "eps.list = 1e-2, 1e-3, 1e-4\n");
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("eps.list"));
    assert!(!t.path().join("out").exists());
}

#[test]
fn dry_run_does_no_work() {
    let t = tempfile::tempdir().unwrap();
    let o = call(t.path(), &["kv", "--dry-run"], "grid.n = 32\neps.list = 1e-3\noutput.dir = out\n");
    assert_eq!(o.status.code(), Some(0));
    let s = String::from_utf8_lossy(&o.stdout);
    assert!(s.contains("reduced dimension 128"), "{s}");
    assert!(!t.path().join("out").exists());
    let o = call(t.path(), &["kv", "--dry-run"], "domain.kind = unit_square\neps.list = 1e-3\n");
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bad_thread_count_is_an_error() {
    let t = tempfile::tempdir().unwrap();
    std::fs::write(t.path().join("run.cfg"), MS0).unwrap();
    let o = Command::new(BIN)
        .args(["qr", "--config", "run.cfg", "--dry-run"])
        .env("CAUCHY_STOKES_THREADS", "0")
        .current_dir(t.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn reruns_are_identical_and_out_overrides() {
    let t = tempfile::tempdir().unwrap();
    let cfg = "grid.n = 16\neps.list = 1e-1, 1e-3\n";
    assert_eq!(call(t.path(), &["kv", "--out", "a"], cfg).status.code(), Some(0));
    assert_eq!(call(t.path(), &["kv", "--out", "b"], cfg).status.code(), Some(0));
    let m = RunManifest::load(&t.path().join("a")).unwrap();
    assert_eq!(m.wall_ms, 0.0);
    for a in &m.artifacts {
        let x = std::fs::read(t.path().join("a").join(&a.path)).unwrap();
        let y = std::fs::read(t.path().join("b").join(&a.path)).unwrap();
        assert_eq!(x, y, "{}", a.path);
    }
    assert_eq!(std::fs::read(t.path().join("a/manifest.json")).unwrap(), std::fs::read(t.path().join("b/manifest.json")).unwrap());
}

#[test]
fn flag_failure_exits_two() {
    // Incompatible data over four decades of small ε: the norm grows, but far less than tenfold.
    let t = tempfile::tempdir().unwrap();
    let cfg = "domain.kind = unit_square\ngrid.n = 16\ncase.name = MS1\ncase.incompatible = MS2\neps.list = 1e-4, 1e-5, 1e-6, 1e-8\n";
    let o = call(t.path(), &["study-conv"], cfg);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL blowup"));
    assert!(!RunManifest::load(&t.path().join("out")).unwrap().passed);
}

#[test]
fn config_round_trip_of_defaults() {
    let c = Config::parse_str("# nothing\n\n").unwrap();
    assert_eq!(c.n, 32);
    assert!(c.echo.is_empty());
}
