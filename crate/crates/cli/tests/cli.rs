use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn exdim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exdim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn list_systems_prints_the_registry() {
    let o = exdim(&["list-systems"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let names: Vec<&str> = text
        .lines()
        .map(|l| l.split('\t').next().unwrap())
        .collect();
    assert_eq!(
        names,
        [
            "henon",
            "cantor-shift",
            "fat-cantor",
            "solenoid",
            "lorenz63",
            "lorenz96",
            "henon-heiles"
        ]
    );
}

#[test]
fn zoom_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let dir = tmp.path().join(name);
        let o = exdim(&[
            "zoom",
            "--system",
            "henon",
            "--seed",
            "7",
            "--iters",
            "200000",
            "--k",
            "500",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        dir
    };
    let (a, b) = (run("a"), run("b"));
    let (ma, mb) = (manifest(&a), manifest(&b));
    assert_eq!(ma["outputs"], mb["outputs"]);
    assert_eq!(ma["config_hash"], mb["config_hash"]);
    assert_eq!(
        fs::read(a.join("zoom.csv")).unwrap(),
        fs::read(b.join("zoom.csv")).unwrap()
    );
}

#[test]
fn ei_sweep_writes_the_documented_header() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"n_refs": 2, "dt_grid": [0.01, 0.05], "t_len_grid": [100, 200], "burn_in_time": 10}"#,
    )
    .unwrap();
    let out = tmp.path().join("ei");
    let o = exdim(&[
        "ei-sweep",
        "--system",
        "lorenz63",
        "--t-len",
        "200",
        "--q",
        "0.99",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("ei.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "dt,t_len,q_mode,q,theta_mean,theta_std,tc_mean,tc_std,n_refs"
    );
    let m = manifest(&out);
    assert_eq!(m["config"]["t_len"], 200.0);
    assert_eq!(m["config"]["n_refs"], 2);
}

#[test]
fn flags_override_the_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"seed": 3, "q": 0.95, "samples": 20000}"#).unwrap();
    let out = tmp.path().join("iid");
    let o = exdim(&[
        "iid-demo",
        "--config",
        cfg.to_str().unwrap(),
        "--q",
        "0.98",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    assert_eq!(m["config"]["q"], 0.98);
    assert_eq!(m["config"]["seed"], 3);
    assert!(out.join("iid.json").exists());
    assert!(String::from_utf8_lossy(&o.stderr).contains("resolved config"));
}

#[test]
fn config_errors_exit_1_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("never");
    let o = exdim(&["zoom", "--bogus", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
    let o = exdim(&[
        "zoom",
        "--system",
        "rossler",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let o = exdim(&[
        "ei-sweep",
        "--system",
        "henon",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let o = exdim(&["zoom", "--q", "1.5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn help_lists_every_flag_with_its_default() {
    let o = exdim(&["ensemble", "--help"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for flag in [
        "--system",
        "--seed",
        "--refs",
        "--iters",
        "--time",
        "--dt",
        "--t-len",
        "--k",
        "--q ",
        "--q-mode",
        "--b",
        "--config",
        "--out",
        "--format",
        "--threads",
    ] {
        let line = text
            .lines()
            .find(|l| l.contains(flag))
            .unwrap_or_else(|| panic!("{flag} missing"));
        assert!(
            line.contains("[default:") || line.contains("[possible values"),
            "{line}"
        );
    }
}
