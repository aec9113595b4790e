use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const OPT_G: &str = "37.64209383959994";
const OPT_T: &str = "21.949205116327146";

fn qst(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qst"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("QST_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn table1_analytic_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = qst(&["table1", "--analytic-only"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&dir.path().join("table1.json"));
    assert_eq!(v["analytic"]["g_max_mhz"], 37.5);
    assert_eq!(v["analytic"]["t_qst_ns"], 22.0);
    let f = v["analytic"]["simulation"]["fidelity"].as_f64().unwrap();
    assert!((f - 0.99992).abs() <= 2e-5);
    assert!(v["optimized"].is_null());
    assert_eq!(v["config"]["eta"], 200.0);
}

#[test]
fn table1_flags_coupling_cap() {
    let dir = tempfile::tempdir().unwrap();
    let out = qst(&["table1", "--eta-mhz", "400"], dir.path());
    assert!(out.status.success());
    let v = read_json(&dir.path().join("table1.json"));
    assert_eq!(v["analytic"]["g_max_mhz"], 75.0);
    assert_eq!(v["analytic"]["exceeds_coupling_cap"], true);
    assert!(v["analytic"]["simulation"].is_null());
}

#[test]
fn invalid_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qst(&["validate", "--t2-us", "200"], dir.path()).status.code(), Some(2));
    assert_eq!(qst(&["errors", "--g-max-mhz", "37"], dir.path()).status.code(), Some(2));
    assert_eq!(qst(&["table1", "--dt-ns", "-1"], dir.path()).status.code(), Some(2));
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"eta": 200, "colour": 3}"#).unwrap();
    assert_eq!(qst(&["table1", "--config", cfg.to_str().unwrap()], dir.path()).status.code(), Some(2));
}

#[test]
fn coarse_step_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let out = qst(&["validate", "--dt-ns", "0.5"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("check dt_halving: FAIL"), "{stdout}");
    assert!(stdout.contains("check kraus_completeness: PASS"));
}

#[test]
fn default_validation_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = qst(&["validate"], dir.path());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert!(!stdout.contains("FAIL"));
}

#[test]
fn populations_reach_target_states() {
    let dir = tempfile::tempdir().unwrap();
    let out = qst(&["populations", "--g-max-mhz", OPT_G, "--t-qst-ns", OPT_T], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("fig2b.csv"));
    assert_eq!(header, ["t_ns", "p01", "p02"]);
    assert_eq!(rows[0], [0.0, 0.0, 0.0]);
    let last = rows.last().unwrap();
    assert!((last[0] - OPT_T.parse::<f64>().unwrap()).abs() < 1e-9);
    assert!(last[1] >= 0.9999 && last[2] >= 0.9999);
    let spacing = rows[1][0];
    assert!(spacing <= 0.05 && spacing > 0.049);
    assert!(rows.windows(2).all(|w| (w[1][0] - w[0][0] - spacing).abs() < 1e-9));
    let side = read_json(&dir.path().join("fig2b.config.json"));
    assert_eq!(side["config"]["dt"], 0.001);
    assert_eq!(side["pulse"]["source"], "explicit");
}

#[test]
fn schedule_pulses_are_sequential() {
    let dir = tempfile::tempdir().unwrap();
    let out = qst(&["schedule", "--qutrits", "4", "--analytic"], dir.path());
    assert!(out.status.success());
    let (header, rows) = read_csv(&dir.path().join("fig3.csv"));
    assert_eq!(header, ["t_ns", "g1", "g2", "g3"]);
    assert_eq!(rows.last().unwrap()[0], 66.0);
    assert!(rows.iter().all(|r| r[1..].iter().filter(|g| **g != 0.0).count() <= 1));
    assert!(rows.iter().any(|r| r[3] == 37.5));

    let out = qst(&["schedule", "--qutrits", "2", "--analytic"], dir.path());
    assert!(out.status.success());
    let (header, rows) = read_csv(&dir.path().join("fig3.csv"));
    assert_eq!(header, ["t_ns", "g1"]);
    assert_eq!(rows.last().unwrap()[0], 22.0);
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["errors", "--g-max-mhz", OPT_G, "--t-qst-ns", OPT_T, "--n-steps", "20"];
    assert!(qst(&args, dir.path()).status.success());
    let first: Vec<String> = ["fig4.csv", "fits.json", "fig4.config.json"]
        .iter()
        .map(|f| std::fs::read_to_string(dir.path().join(f)).unwrap())
        .collect();
    assert!(qst(&args, dir.path()).status.success());
    for (name, before) in ["fig4.csv", "fits.json", "fig4.config.json"].iter().zip(first) {
        assert_eq!(std::fs::read_to_string(dir.path().join(name)).unwrap(), before, "{name} changed");
    }
}

#[test]
fn errors_curve_and_fits() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"n_steps": 10, "t1": 60, "t2": 60}"#).unwrap();
    let out = qst(
        &["errors", "--config", cfg.to_str().unwrap(), "--n-steps", "12", "--g-max-mhz", OPT_G, "--t-qst-ns", OPT_T],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("fig4.csv"));
    assert_eq!(header, ["k", "error_intrinsic", "error_decoherence"]);
    assert_eq!(rows.len(), 12);
    assert_eq!(rows[0][0], 1.0);
    let fits = read_json(&dir.path().join("fits.json"));
    assert_eq!(fits["config"]["n_steps"], 12);
    assert_eq!(fits["intrinsic"]["exponent"], 4);
    assert_eq!(fits["decoherence"]["exponent"], 1);
    for key in ["prefactor", "rms_residual", "k_star"] {
        assert!(fits["intrinsic"][key].is_number(), "{key}");
    }
    let b = fits["decoherence"]["prefactor"].as_f64().unwrap();
    assert!((b / 3.6e-4 - 1.0).abs() < 0.5);
}

#[test]
fn output_dir_defaults_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_qst"))
        .args(["table1", "--analytic-only"])
        .env("QST_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("table1.json").exists());
}
