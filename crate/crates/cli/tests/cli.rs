//! End-to-end checks of the ntnsim binary.

use std::path::Path;
use std::process::{Command, Output};

fn ntnsim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ntnsim"))
        .args(args)
        .current_dir(dir)
        .env_remove("NTNSIM_SEED")
        .output()
        .expect("binary must spawn")
}

fn write(dir: &Path, name: &str, contents: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_prints_summary_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.conf", "scenario_id = smoke\nmu = 5\n");
    let out = ntnsim(
        &["run", "--config", &cfg, "--out", "out.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("smoke: seed 1"), "{stdout}");
    assert!(stdout.contains("accepted 1000"), "{stdout}");
    let csv = std::fs::read_to_string(dir.path().join("out.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2, "header plus one row");
}

#[test]
fn sweep_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sweep.conf",
        "scenario_id = det\nfixed_attempts = 1\ntotal_packets = 3000\n\
         sweep.field = buffer_fraction\nsweep.values = 0.5,1.0,1.4\n",
    );
    let a = ntnsim(
        &["sweep", "--config", &cfg, "--out", "a.csv", "--quiet"],
        dir.path(),
    );
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = ntnsim(
        &["sweep", "--config", &cfg, "--out", "b.csv", "--quiet"],
        dir.path(),
    );
    assert!(b.status.success());
    let bytes_a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let bytes_b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(bytes_a, bytes_b);
    assert_eq!(String::from_utf8_lossy(&bytes_a).lines().count(), 4);
}

#[test]
fn seed_precedence_flag_over_env_over_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "seed.conf", "mu = 5\nseed = 1\n");

    let from_env = Command::new(env!("CARGO_BIN_EXE_ntnsim"))
        .args(["run", "--config", &cfg])
        .current_dir(dir.path())
        .env("NTNSIM_SEED", "99")
        .output()
        .unwrap();
    assert!(from_env.status.success());
    assert!(String::from_utf8_lossy(&from_env.stdout).contains("seed 99"));

    let from_flag = Command::new(env!("CARGO_BIN_EXE_ntnsim"))
        .args(["run", "--config", &cfg, "--seed", "7"])
        .current_dir(dir.path())
        .env("NTNSIM_SEED", "99")
        .output()
        .unwrap();
    assert!(from_flag.status.success());
    assert!(String::from_utf8_lossy(&from_flag.stdout).contains("seed 7"));
}

#[test]
fn estimate_reports_n_hat_timer_and_buffer() {
    let dir = tempfile::tempdir().unwrap();
    let obs = write(dir.path(), "stamps.csv", "22.0\n42.0\n62.0\n");
    let out = ntnsim(
        &["estimate", "--obs", &obs, "--rd", "20", "--tpro", "0.5"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("n_hat = 3"), "{stdout}");
    assert!(stdout.contains("t_d_ms = 66"), "{stdout}");
    assert!(stdout.contains("b_star_cells = 660"), "{stdout}");
}

#[test]
fn invalid_config_fails_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.conf", "mu = 2\n");
    let out = ntnsim(&["run", "--config", &cfg], dir.path());
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("mu = 2"), "{stderr}");
}

#[test]
fn timer_log_records_adaptations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "log.conf", "mu = 5\ntotal_packets = 2000\n");
    let out = ntnsim(
        &[
            "run",
            "--config",
            &cfg,
            "--timer-log",
            "timers.csv",
            "--quiet",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let log = std::fs::read_to_string(dir.path().join("timers.csv")).unwrap();
    assert!(log.lines().count() >= 2, "header plus at least one adaptation");
    assert!(log.starts_with("scenario_id,seed,time,n_hat"));
}
