use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const ARTIFACTS: [&str; 7] = [
    "schedule.csv",
    "report.json",
    "report.txt",
    "profit_per_state.csv",
    "bess_dispatch.csv",
    "load_profile.csv",
    "effective_config.toml",
];

fn mpas(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpas"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data")
}

/// Short search budget so debug builds stay quick.
fn quick_config(dir: &Path, name: &str, extra: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, format!("seed = 3\n{extra}\n[swarm]\npopulation = 6\ngenerations = 15\n")).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_every_artifact() {
    let tmp = TempDir::new().unwrap();
    let cfg = quick_config(tmp.path(), "run.toml", "");
    let o = mpas(&["run", "--config", cfg.to_str().unwrap(), "--out", "out"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("DPF "));
    for name in ARTIFACTS {
        assert!(tmp.path().join("out").join(name).is_file(), "{name}");
    }
    for name in ARTIFACTS.iter().filter(|n| n.ends_with(".csv")) {
        let text = fs::read_to_string(tmp.path().join("out").join(name)).unwrap();
        assert_eq!(text.lines().count(), 25, "{name}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["strategy"], "mpas");
    assert_eq!(report["seed"], 3);
    for key in ["economic", "energy", "ldi", "shift", "profiles", "end_soc"] {
        assert!(!report[key].is_null(), "{key}");
    }
}

#[test]
fn missing_price_file() {
    let tmp = TempDir::new().unwrap();
    let o = mpas(&["run", "--prices", "nope.csv", "--out", "out"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("price file not found"), "{err}");
    assert_eq!(err.trim().lines().count(), 1);
}

#[test]
fn fixed_window_is_tagged() {
    let tmp = TempDir::new().unwrap();
    let cfg = quick_config(tmp.path(), "run.toml", "");
    let o = mpas(
        &["run", "--config", cfg.to_str().unwrap(), "--strategy", "fixed-window", "--out", "fw"],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let txt = fs::read_to_string(tmp.path().join("fw/report.txt")).unwrap();
    assert!(txt.starts_with("Strategy: fixed-window"));
}

#[test]
fn unknown_strategy_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let o = mpas(&["run", "--strategy", "greedy"], tmp.path());
    assert!(!o.status.success());
}

#[test]
fn effective_config_reproduces_reports() {
    let tmp = TempDir::new().unwrap();
    let o = mpas(&["run", "--seed", "11", "--k", "1.5", "--no-reverse-constraint", "--out", "a"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let o = mpas(&["run", "--config", "a/effective_config.toml", "--out", "b"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    for name in ARTIFACTS.iter().filter(|n| **n != "effective_config.toml") {
        let a = fs::read(tmp.path().join("a").join(name)).unwrap();
        let b = fs::read(tmp.path().join("b").join(name)).unwrap();
        assert!(a == b, "{name} differs");
    }
    let cfg = fs::read_to_string(tmp.path().join("a/effective_config.toml")).unwrap();
    assert!(cfg.contains("seed = 11") && cfg.contains("k = 1.5") && cfg.contains("forbid_reverse_power = false"));
}

#[test]
fn explicit_inputs_match_bundled_defaults() {
    let tmp = TempDir::new().unwrap();
    let cfg = quick_config(tmp.path(), "run.toml", "");
    let synthetic = data_dir().join("synthetic");
    let o = mpas(&["run", "--config", cfg.to_str().unwrap(), "--out", "bundled"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let o = mpas(
        &[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--case",
            data_dir().join("ieee33.csv").to_str().unwrap(),
            "--profiles",
            synthetic.to_str().unwrap(),
            "--prices",
            synthetic.join("prices.csv").to_str().unwrap(),
            "--out",
            "explicit",
        ],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let a = fs::read(tmp.path().join("bundled/report.json")).unwrap();
    let b = fs::read(tmp.path().join("explicit/report.json")).unwrap();
    assert!(a == b);
}

#[test]
fn missing_profile_directory() {
    let tmp = TempDir::new().unwrap();
    let o = mpas(&["run", "--profiles", "hist"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("profile directory not found"), "{}", stderr(&o));
}

#[test]
fn bad_config_key_is_input_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = quick_config(tmp.path(), "bad.toml", "sede = 4");
    let o = mpas(&["run", "--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("config"));
}

#[test]
fn collapsing_feeder_exits_with_convergence_code() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("weak.csv"), "[bus]\n1,0,0\n2,3000,0\n[line]\n1,2,40,40,\n").unwrap();
    let cfg = quick_config(tmp.path(), "run.toml", "");
    let o = mpas(&["run", "--config", cfg.to_str().unwrap(), "--case", "weak.csv"], tmp.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("state 0"));
}

#[test]
fn compare_identical_configs_has_zero_deltas() {
    let tmp = TempDir::new().unwrap();
    let a = quick_config(tmp.path(), "a.toml", "");
    let b = quick_config(tmp.path(), "b.toml", "");
    let o = mpas(&["compare", a.to_str().unwrap(), b.to_str().unwrap(), "--out", "cmp"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let cmp: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("cmp/comparison.json")).unwrap()).unwrap();
    assert!(cmp["rows"].as_array().unwrap().iter().all(|r| r["delta_pct"] == 0.0));
    assert_eq!(cmp["profit_delta_pct"], 0.0);
}

#[test]
fn compare_strategies() {
    let tmp = TempDir::new().unwrap();
    let a = quick_config(tmp.path(), "a.toml", "strategy = \"mpas\"");
    let b = quick_config(tmp.path(), "b.toml", "strategy = \"fixed-window\"");
    let o = mpas(&["compare", a.to_str().unwrap(), b.to_str().unwrap()], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("A (mpas)") && out.contains("B (fixed-window)"));
    assert!(out.contains("Profit +"), "{out}");
}

#[test]
fn compare_different_cases_fails() {
    let tmp = TempDir::new().unwrap();
    let case = fs::read_to_string(data_dir().join("ieee33.csv")).unwrap();
    fs::write(tmp.path().join("other.csv"), case.replacen("\n2,100,60", "\n2,120,60", 1)).unwrap();
    assert_ne!(fs::read_to_string(tmp.path().join("other.csv")).unwrap(), case);
    let a = quick_config(tmp.path(), "a.toml", "");
    let b = quick_config(tmp.path(), "b.toml", "[inputs]\ncase = \"other.csv\"");
    let o = mpas(&["compare", a.to_str().unwrap(), b.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("comparison error"), "{}", stderr(&o));
}
