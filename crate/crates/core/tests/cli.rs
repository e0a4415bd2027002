use std::path::Path;
use std::process::{Command, Output};

use ferrojunction::config::finite_schedule;
use ferrojunction::{Regime, RunConfig};

fn small_config() -> RunConfig {
    let mut cfg = RunConfig::new(Regime::Finite(1.0), finite_schedule(1.0, &[0.4, 0.2]));
    cfg.grid_a = [5; 3];
    cfg.grid_b = [5; 3];
    cfg.grid_1d = 17;
    cfg.grid_2d = [9, 9];
    cfg.optimizer.restarts = 2;
    cfg.optimizer.max_iters = 60;
    cfg
}

fn write_config(dir: &Path, cfg: &RunConfig) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string(cfg).unwrap()).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ferrojunction")).args(args).output().unwrap()
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg.alpha = -1.0;
    let path = write_config(dir.path(), &cfg);
    let out = run(&["limit1d", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{ \"regime\": ").unwrap();
    let out = run(&["sweep", "--config", broken.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["gradcheck", "--threads", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_writes_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &small_config());
    let mut tables = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let csv = dir.path().join(name);
        let out = run(&["sweep", "--config", path.to_str().unwrap(), "--out", csv.to_str().unwrap(), "--seed", "7"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(csv.with_extension("json").exists());
        tables.push(std::fs::read_to_string(&csv).unwrap());
    }
    let lines: Vec<&str> = tables[0].lines().collect();
    assert!(lines[0].starts_with("h_a,h_b,ratio,regime"), "{}", lines[0]);
    assert_eq!(lines.len(), 3);
    assert_eq!(tables[0], tables[1]);
}

#[test]
fn single_solves_report_nonconvergence_with_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg.optimizer.max_iters = 1;
    cfg.optimizer.restarts = 1;
    let path = write_config(dir.path(), &cfg);
    let json = dir.path().join("solve.json");
    let out = run(&["solve3d", "--config", path.to_str().unwrap(), "--out", json.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["converged"], serde_json::Value::Bool(false));
}

#[test]
fn limit_and_gradcheck_succeed() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg.optimizer.max_iters = 20000;
    let path = write_config(dir.path(), &cfg);
    let out = run(&["limit1d", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["report"]["energy"]["total"].as_f64().unwrap() > 0.0);

    let out = run(&["gradcheck", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    let worst: f64 = text.trim().rsplit(' ').next().unwrap().parse().unwrap();
    assert!(worst <= 1e-5, "{text}");
}
