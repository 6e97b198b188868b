use std::path::Path;
use std::process::Command;

use adaptive_regulator::scenario::{IdentifierKind, PlantConfig, ScenarioConfig};

fn aimreg(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_aimreg")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

fn write(dir: &Path, name: &str, cfg: &ScenarioConfig) -> String {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

fn quick() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::van_der_pol_default();
    cfg.sim.horizon = 2.0;
    cfg
}

#[test]
fn validate_and_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.json", &quick());
    assert_eq!(aimreg(&["validate", &good]), (0, "ok\n".into()));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"plant": {"kind": "van_der_pol"}}"#).unwrap();
    assert_eq!(aimreg(&["validate", bad.to_str().unwrap()]).0, 1);
    assert_eq!(aimreg(&["validate", "/does/not/exist.json"]).0, 1);

    let mut cfg = quick();
    cfg.regulator.observer.h_coeffs = vec![vec![1.0, 1.0, 1.0]];
    let complex_roots = write(dir.path(), "complex.json", &cfg);
    assert_eq!(aimreg(&["simulate", &complex_roots]).0, 1);

    assert_eq!(aimreg(&["sweep", &good, "--axis", "gain", "--values", "1"]).0, 1);
    assert_eq!(aimreg(&["frobnicate"]).0, 1);
}

#[test]
fn simulate_prints_the_summary_and_honours_assert() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick();
    cfg.identifier.kind = IdentifierKind::Ls;
    cfg.output.csv = Some(dir.path().join("run.csv"));
    cfg.assertions.max_steady_state_y = Some(1e-12);
    let path = write(dir.path(), "run.json", &cfg);

    let (code, stdout) = aimreg(&["simulate", &path]);
    assert_eq!(code, 0);
    let summary: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let mut keys: Vec<&str> = summary.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(keys, ["final_theta", "jumps_total", "settling_time_s", "steady_state_max_y"]);
    assert!(dir.path().join("run.csv").exists());

    assert_eq!(aimreg(&["simulate", &path, "--assert"]).0, 3);
    cfg.assertions.max_steady_state_y = Some(10.0);
    let loose = write(dir.path(), "loose.json", &cfg);
    assert_eq!(aimreg(&["simulate", &loose, "--assert"]).0, 0);
}

#[test]
fn integration_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick();
    cfg.plant = PlantConfig::LinearHarmonic { rho: 1.0, damping: [-400.0, -400.0], coupling: [0.0, 0.0], x0: [1.0, 0.0], w0: [0.0, 0.0] };
    cfg.regulator.sat_level = 1e-3;
    cfg.regulator.d_eta = Some(2);
    cfg.sim.horizon = 5.0;
    let path = write(dir.path(), "unstable.json", &cfg);
    assert_eq!(aimreg(&["simulate", &path]).0, 2);
}

#[test]
fn sweep_table_and_check_identifier() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick();
    cfg.output.summary = Some(dir.path().join("s.json"));
    let path = write(dir.path(), "sweep.json", &cfg);
    let (code, stdout) = aimreg(&["sweep", &path, "--axis", "ell", "--values", "5,40"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "value,steady_state_max_y,settling_time_s,error");
    assert_eq!(lines.len(), 3);
    assert!(dir.path().join("s_ell5.json").exists() && dir.path().join("s_ell40.json").exists());

    // every cell is validated before any runs
    let (code, stdout) = aimreg(&["sweep", &path, "--axis", "ell", "--values", "0.5,10"]);
    assert_eq!(code, 1);
    assert!(stdout.is_empty());

    // 100 ticks: enough for the forgetting factor 0.99 to halve the memory mismatch
    let mut cfg = quick();
    cfg.identifier.kind = IdentifierKind::Ls;
    cfg.sim.horizon = 10.0;
    let path = write(dir.path(), "ls.json", &cfg);
    let (code, stdout) = aimreg(&["check-identifier", &path, "--trials", "2", "--assert"]);
    assert_eq!(code, 0, "{stdout}");
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["optimality"], true);
    assert_eq!(report["stability"], true);
}
