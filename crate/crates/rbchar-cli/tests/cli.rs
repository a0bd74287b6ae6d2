use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn rbchar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbchar")).args(args).output().expect("spawn rbchar")
}

fn ok(args: &[&str]) -> String {
    let out = rbchar(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn p(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn generate_and_detect_ar1() {
    let dir = TempDir::new().unwrap();
    let ts = p(&dir, "ts.csv");
    ok(&["generate", "--preset", "ar1", "--rho", "0.5", "--n", "2500", "--seed", "7", "--out", s(&ts)]);
    let text = std::fs::read_to_string(&ts).unwrap();
    assert_eq!(text.lines().count(), 2501);
    assert_eq!(text.lines().next(), Some("value"));

    let report = p(&dir, "report.json");
    ok(&["detect-stationarity", "--in", s(&ts), "--blocks", "50", "--bound", "nonparametric", "--c1", "1.0", "--out", s(&report)]);
    let doc = json(&report);
    assert_eq!(doc["verdict"], "Stationary");
    assert_eq!(doc["config"]["subcommand"], "detect-stationarity");
    assert_eq!(doc["config"]["bound"]["c1"], 1.0);
    assert_eq!(doc["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(doc["stages"].as_array().unwrap().len(), 50);
    let traj = std::fs::read_to_string(report.with_extension("trajectory.csv")).unwrap();
    assert!(traj.starts_with("j,s,c,y,post_mean,post_var\n"));
    assert_eq!(traj.lines().count(), 51);
}

#[test]
fn explosive_ar1_is_nonstationary() {
    let dir = TempDir::new().unwrap();
    let ts = p(&dir, "ts.csv");
    ok(&["generate", "--preset", "ar1", "--rho", "1.05", "--n", "2500", "--seed", "3", "--out", s(&ts)]);
    let doc: Value = serde_json::from_str(&ok(&["detect-stationarity", "--in", s(&ts), "--block-size", "50", "--sup-norm", "exact"])).unwrap();
    assert_eq!(doc["verdict"], "Nonstationary");
}

#[test]
fn frequency_top_bin() {
    let dir = TempDir::new().unwrap();
    let osc = p(&dir, "osc.csv");
    ok(&["generate", "--preset", "single-freq", "--seed", "0", "--out", s(&osc)]);
    let traj = p(&dir, "freq.csv");
    let doc: Value =
        serde_json::from_str(&ok(&["detect-frequency", "--in", s(&osc), "--r", "1000", "--M", "50", "--trajectory", s(&traj)]))
            .unwrap();
    let means = doc["final_means"].as_array().unwrap();
    assert_eq!(means.len(), 50);
    let top = means[49].as_f64().unwrap();
    assert!((top - 0.02).abs() < 0.005, "{top}");
    assert!(std::fs::read_to_string(&traj).unwrap().starts_with("stage,bin,posterior_mean,posterior_variance"));

    let inf: Value = serde_json::from_str(&ok(&["detect-frequency", "--in", s(&osc), "--r", "1", "--infinite"])).unwrap();
    assert!(inf["final_means"].as_array().unwrap().len() > 50);
}

#[test]
fn pattern_detectors() {
    let dir = TempDir::new().unwrap();
    let pat = p(&dir, "hpp.csv");
    ok(&["generate", "--preset", "hpp", "--side", "20", "--seed", "1", "--out", s(&pat)]);
    assert!(std::fs::read_to_string(&pat).unwrap().starts_with("# window 0 20 0 20\n"));
    for (cmd, extra) in [
        ("detect-csr", vec![]),
        ("detect-pp-stationarity", vec!["--sup-norm", "exact"]),
        ("detect-pp-stationarity", vec![]),
        ("detect-poisson", vec!["--matching", "random"]),
    ] {
        let mut args = vec![cmd, "--in", s(&pat), "--clusters", "10", "--c1", "0.25", "--seed", "4"];
        args.extend(extra);
        let doc: Value = serde_json::from_str(&ok(&args)).unwrap();
        assert!(doc["verdict"].is_string(), "{cmd}");
        assert_eq!(doc["seed"], 4);
    }
    // window-less input warns and falls back to the bounding box
    let bare = p(&dir, "bare.csv");
    std::fs::write(&bare, "x,y\n".to_string() + &(0..200).map(|i| format!("{},{}\n", i % 17, (i * 7) % 19)).collect::<String>())
        .unwrap();
    let out = rbchar(&["detect-csr", "--in", s(&bare), "--clusters", "5", "--seed", "0"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bounding box"));
}

#[test]
fn spatial_and_mcmc() {
    let dir = TempDir::new().unwrap();
    let field = p(&dir, "field.csv");
    ok(&["generate", "--preset", "spatial-stationary", "--n", "300", "--seed", "2", "--out", s(&field)]);
    let doc: Value = serde_json::from_str(&ok(&["detect-stationarity", "--in", s(&field), "--clusters", "10"])).unwrap();
    assert!(doc["verdict"].is_string());
    let cov: Value = serde_json::from_str(&ok(&[
        "detect-covariance", "--in", s(&field), "--clusters", "10", "--bands", "0,0.05,0.1",
    ]))
    .unwrap();
    assert!(cov["bands"].is_array());

    let doc: Value = serde_json::from_str(&ok(&[
        "mcmc-diagnose", "--preset", "tmcmc-normal", "--seed", "1", "--d", "10", "--iterations", "5000", "--block-size", "100",
    ]))
    .unwrap();
    assert!(doc["verdict"].is_string());
}

#[test]
fn calibration_succeeds_and_fails() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (p(&dir, "a.csv"), p(&dir, "b.csv"));
    ok(&["generate", "--preset", "ar1", "--rho", "0.3", "--n", "2500", "--seed", "1", "--out", s(&a)]);
    ok(&["generate", "--preset", "ar1", "--rho", "1.05", "--n", "2500", "--seed", "1", "--out", s(&b)]);
    let doc: Value = serde_json::from_str(&ok(&[
        "calibrate-c1", "--bench", s(&a), "--contrast", s(&b), "--blocks", "50", "--sup-norm", "exact",
    ]))
    .unwrap();
    let c1 = doc["c1"].as_f64().unwrap();
    let verdict = |path: &Path| {
        let c = c1.to_string();
        let r: Value = serde_json::from_str(&ok(&["detect-stationarity", "--in", s(path), "--blocks", "50", "--sup-norm", "exact", "--c1", &c])).unwrap();
        r["verdict"].clone()
    };
    assert_eq!(verdict(&a), "Stationary");
    assert_eq!(verdict(&b), "Nonstationary");

    // no grid value makes the explosive series read stationary
    let out = rbchar(&["calibrate-c1", "--bench", s(&b), "--mode", "min-for-stationary", "--blocks", "50", "--grid", "0.01:0.05:0.01"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn input_errors_exit_2() {
    assert_eq!(rbchar(&["detect-csr", "--bogus"]).status.code(), Some(2));
    assert_eq!(rbchar(&["detect-stationarity", "--in", "/nonexistent.csv", "--blocks", "5"]).status.code(), Some(2));
    assert_eq!(rbchar(&["generate", "--preset", "nope", "--seed", "1"]).status.code(), Some(2));
    assert_eq!(rbchar(&["mcmc-diagnose", "--preset", "tmcmc-normal"]).status.code(), Some(2));
    let dir = TempDir::new().unwrap();
    let ts = p(&dir, "ts.csv");
    std::fs::write(&ts, "value\n1\n2\n3\n4\n").unwrap();
    assert_eq!(rbchar(&["detect-stationarity", "--in", s(&ts)]).status.code(), Some(2));
    assert_eq!(rbchar(&["detect-frequency", "--in", s(&ts), "--r", "1"]).status.code(), Some(2));
}

#[test]
fn reports_independent_of_threads() {
    let dir = TempDir::new().unwrap();
    let field = p(&dir, "f.csv");
    ok(&["generate", "--preset", "spatial-nonstationary", "--n", "400", "--seed", "5", "--out", s(&field)]);
    let run = |t: &str| ok(&["--threads", t, "detect-stationarity", "--in", s(&field), "--clusters", "20", "--seed", "9"]);
    assert_eq!(run("1"), run("4"));
}
