use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
seeds = [2]
outer_loops = 3

[model]
n = 40
spinup_steps = 500

[window]
label = "48h"

[observations]
count = 20

[[solver]]
method = "riot"
m = 12
oversample = 2
precond = true
rotation = true

[[solver]]
method = "varcg"
m = 6

[sweep]
ranks = [1, 5, 40]
oversample = [0, 3]
sketch_seeds = [0, 1, 2]
"#;

fn riot(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riot"))
        .args(args)
        .current_dir(dir)
        .env_remove("RIOT_WORKERS")
        .output()
        .unwrap()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("exp.toml"), CONFIG).unwrap();
    dir
}

#[test]
fn check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = riot(&["check", "--workers", "2"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 5);
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(riot(&[], dir.path()).status.code(), Some(2));
    assert_eq!(riot(&["grid"], dir.path()).status.code(), Some(2));
    assert_eq!(riot(&["dance"], dir.path()).status.code(), Some(2));
}

#[test]
fn malformed_config_reports_line_and_field() {
    let dir = setup();
    std::fs::write(dir.path().join("bad.toml"), CONFIG.replace("count = 20", "count = \"twenty\"")).unwrap();
    let out = riot(&["grid", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("config error"), "{err}");
    assert!(err.contains("line 13"), "{err}");
    assert!(err.contains("count"), "{err}");
}

#[test]
fn missing_config_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = riot(&["grid", "--config", "nope.toml"], dir.path());
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn run_twice_is_byte_identical() {
    let dir = setup();
    let a = riot(&["run", "--config", "exp.toml", "--out", "a", "--workers", "1"], dir.path());
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = riot(&["run", "--config", "exp.toml", "--out", "b", "--workers", "3"], dir.path());
    assert!(b.status.success());
    let read = |d: &str| std::fs::read(dir.path().join(d).join("results.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_eq!(read("a").iter().filter(|&&c| c == b'\n').count(), 1 + 3);
    let manifest = std::fs::read_to_string(dir.path().join("a/manifest.toml")).unwrap();
    assert!(manifest.contains("command = \"run\""));
    assert!(manifest.contains("seeds = [2]"));
}

#[test]
fn worker_env_override_keeps_output() {
    let dir = setup();
    let a = riot(&["grid", "--config", "exp.toml", "--out", "a"], dir.path());
    assert!(a.status.success());
    let b = Command::new(env!("CARGO_BIN_EXE_riot"))
        .args(["grid", "--config", "exp.toml", "--out", "b"])
        .current_dir(dir.path())
        .env("RIOT_WORKERS", "4")
        .output()
        .unwrap();
    assert!(b.status.success());
    let read = |d: &str| std::fs::read(dir.path().join(d).join("results.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_eq!(read("a").iter().filter(|&&c| c == b'\n').count(), 1 + 2 * 3);
}

#[test]
fn seed_flag_replaces_the_seed_list() {
    let dir = setup();
    let a = riot(&["run", "--config", "exp.toml", "--out", "a", "--seed", "5"], dir.path());
    assert!(a.status.success());
    let text = std::fs::read_to_string(dir.path().join("a/results.csv")).unwrap();
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(8) == Some("5")), "{text}");
}

#[test]
fn spinup_sweep_and_eigs_write_tables() {
    let dir = setup();
    assert!(riot(&["spinup", "--config", "exp.toml", "--out", "o"], dir.path()).status.success());
    let truth = std::fs::read_to_string(dir.path().join("o/truth.csv")).unwrap();
    assert_eq!(truth.lines().count(), 1 + 40);

    assert!(riot(&["sweep", "--config", "exp.toml", "--out", "o"], dir.path()).status.success());
    let sweep = std::fs::read_to_string(dir.path().join("o/sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 1 + 3 * 6);

    let out = riot(
        &["eigs", "--config", "exp.toml", "--out", "o", "--method", "riot", "--m", "12", "--oversample", "2", "--exact"],
        dir.path(),
    );
    assert!(out.status.success());
    let spec = std::fs::read_to_string(dir.path().join("o/spectrum.csv")).unwrap();
    assert_eq!(spec.lines().next(), Some("index,estimate,exact"));
    assert_eq!(spec.lines().count(), 1 + 40);
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("DOFs"));

    let bad = riot(&["eigs", "--config", "exp.toml", "--out", "o", "--method", "varbl", "--m", "4"], dir.path());
    assert_eq!(bad.status.code(), Some(3));
}

#[test]
fn oversized_seed_is_a_config_error() {
    let dir = setup();
    let out = riot(&["run", "--config", "exp.toml", "--seed", "18446744073709551615"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(!dir.path().join("riot-out/results.csv").exists());
}
