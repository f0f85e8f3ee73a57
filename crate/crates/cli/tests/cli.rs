use std::path::Path;
use std::process::{Command, Output};

use quest_core::scenario::DEFAULT_CONFIG_TOML;

fn quest_sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quest-sim")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("scenario.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn link_budget_writes_outputs_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), DEFAULT_CONFIG_TOML);
    let out = dir.path().join("out");
    let o = quest_sim(&["link-budget", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("manifest.json").is_file());
    let csv = std::fs::read_to_string(out.join("link_budget.csv")).unwrap();
    assert!(csv.starts_with("case,component,loss_db\n"));
}

#[test]
fn json_format_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let o = quest_sim(&["detector-aging", "--out", dir.path().to_str().unwrap(), "--format", "json"]);
    assert_eq!(code(&o), 0);
    let body = std::fs::read(dir.path().join("apd_temperatures.json")).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&body).unwrap();
    assert!(v.is_array());
}

#[test]
fn invalid_schedule_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &DEFAULT_CONFIG_TOML.replacen("epps = 0.40", "epps = 0.39", 1));
    let o = quest_sim(&["pass-sim", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("schedule"));
    assert!(!dir.path().join("manifest.json").exists());
}

#[test]
fn malformed_config_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "seed = [");
    assert_eq!(code(&quest_sim(&["pass-sim", "--config", &cfg])), 1);
    let missing = dir.path().join("nope.toml");
    assert_eq!(code(&quest_sim(&["pass-sim", "--config", missing.to_str().unwrap()])), 1);
}

#[test]
fn bad_arguments_exit_1() {
    assert_eq!(code(&quest_sim(&["warp-drive"])), 1);
    assert_eq!(code(&quest_sim(&["pass-sim", "--format", "xml"])), 1);
    assert_eq!(code(&quest_sim(&["pass-sim", "--seed", "minus-one"])), 1);
    assert_eq!(code(&quest_sim(&["--help"])), 0);
}

#[test]
fn seed_controls_output() {
    let run = |seed: &str| {
        let dir = tempfile::tempdir().unwrap();
        let o = quest_sim(&["pass-sim", "--seed", seed, "--out", dir.path().to_str().unwrap()]);
        assert_eq!(code(&o), 0);
        std::fs::read(dir.path().join("pass_windows.csv")).unwrap()
    };
    assert_eq!(run("11"), run("11"));
    assert_ne!(run("11"), run("12"));
}
