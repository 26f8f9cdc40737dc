//! End-to-end checks of the binary: exit codes and output files.

use std::path::Path;
use std::process::Command;

fn frachill() -> Command {
    Command::new(env!("CARGO_BIN_EXE_frachill"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const GOOD: &str = "h = 0.02\nn_steps = 4\nn.x = 16\nextent.x = 3.141592653589793\n\
                    init.mu = cosine:1:0.2\ninit.phi = cosine:2:0.4\ninit.s = constant:0.3\n";

#[test]
fn run_produces_series_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.cfg", GOOD);
    let out = dir.path().join("out");
    let status = frachill()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let series = std::fs::read_to_string(out.join("series.csv")).unwrap();
    assert!(series.starts_with("step,time,outer_iters,outer_ratio,energy,mass"));
    assert_eq!(series.lines().count(), 6);
}

#[test]
fn check_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "check.cfg", GOOD);
    let out = dir.path().join("out");
    let output = frachill()
        .args(["check", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("energy_inequality"));
    assert!(out.join("checks.csv").exists());
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    // missing required key
    let cfg = write_config(dir.path(), "bad.cfg", "h = 0.1\n");
    let status = frachill().args(["run", "--config"]).arg(&cfg).status().unwrap();
    assert_eq!(status.code(), Some(2));
    // unknown key with line number on stderr
    let cfg = write_config(dir.path(), "unknown.cfg", "h = 0.1\nn_steps = 2\nwibble = 3\n");
    let output = frachill().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("line 3"), "{stderr}");
    // unreadable path
    let status = frachill()
        .args(["run", "--config", "/definitely/not/here.cfg"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn admissibility_gate_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "gate.cfg",
        "h = 0.1\nn_steps = 2\npotential = obstacle\ninit.phi = constant:2\n",
    );
    let output = frachill().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("D(F₁)"), "{stderr}");
}

#[test]
fn study_h_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "study.cfg", GOOD);
    let out = dir.path().join("out");
    let status = frachill()
        .args(["study-h", "--levels", "2", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(out.join("study_h.csv")).unwrap();
    assert!(text.starts_with("level,h,n_steps,diff_mu"));
}

#[test]
fn probe_contraction_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "probe.cfg", GOOD);
    let out = dir.path().join("out");
    let status = frachill()
        .args(["probe-contraction", "--pairs", "3", "--seed", "5", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(out.join("probe_contraction.csv")).unwrap();
    assert_eq!(text.lines().count(), 4);
}
