mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

const BIN: &str = env!("CARGO_BIN_EXE_revgas");

fn revgas(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, doc: &Value) -> String {
    let path = dir.join(name);
    fs::write(&path, doc.to_string()).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr_line(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).lines().next().unwrap_or("").to_string()
}

#[test]
fn expand_writes_series_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &common::gas(40, 300, 50, 1));
    let out = dir.path().join("run");
    let o = revgas(&["expand", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr_line(&o));
    let csv = fs::read_to_string(out.join("series.csv")).unwrap();
    assert!(csv.starts_with("step,entropy_macro,entropy_volume,return_fraction,divergence,energy\n"));
    assert_eq!(csv.lines().count(), 1 + 7);
    let summary: Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["protocol"], "expand");
    assert_eq!(summary["seed"], 1);
    assert_eq!(summary["series"], json!(["series.csv"]));
    assert_eq!(summary["config_digest"].as_str().unwrap().len(), 64);
    let last: Vec<&str> = csv.lines().last().unwrap().split(',').collect();
    assert_eq!(summary["headline"]["final_entropy_macro"].as_f64().unwrap(), last[1].parse::<f64>().unwrap());
}

fn outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn every_protocol_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let gas = write_config(dir.path(), "gas.json", &common::gas(40, 600, 20, 5));
    let b = write_config(dir.path(), "b.json", &common::gas(80, 200, 20, 6));
    let one = write_config(dir.path(), "one.json", &common::small_box(1, 0.0, 2000));
    let runs: Vec<Vec<&str>> = vec![
        vec!["expand", "--config", &gas],
        vec!["loschmidt", "--config", &gas, "--reversal-step", "300", "--epsilon", "1e-6"],
        vec!["sync", "--config", &gas, "--config-b", &b, "--lambda", "1e-4", "--prep-steps", "200"],
        vec!["recurrence", "--config", &one, "--max-steps", "2000"],
        vec!["fit", "--config", &gas, "--epsilon", "1e-8", "--kick-step", "100"],
    ];
    for (k, args) in runs.iter().enumerate() {
        let mut seen = Vec::new();
        for rep in 0..2 {
            let out = dir.path().join(format!("p{k}_{rep}"));
            let mut full = args.clone();
            full.extend(["--out", out.to_str().unwrap()]);
            let o = revgas(&full);
            assert!(o.status.success(), "{}: {}", args[0], stderr_line(&o));
            seen.push(outputs(&out));
        }
        assert!(seen[0].len() >= 2);
        assert_eq!(seen[0], seen[1], "{} differs between runs", args[0]);
    }
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &common::gas(20, 100, 50, 1));
    let digest = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        let mut args = vec!["expand", "--config", &cfg, "--out", out.to_str().unwrap()];
        if !seed.is_empty() {
            args.extend(["--seed", seed]);
        }
        assert!(revgas(&args).status.success());
        let v: Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
        (v["seed"].as_u64().unwrap(), v["config_digest"].as_str().unwrap().to_string())
    };
    let (s0, d0) = digest("", "a");
    let (s1, d1) = digest("9", "b");
    assert_eq!((s0, s1), (1, 9));
    assert_ne!(d0, d1);
}

#[test]
fn usage_errors_exit_two_with_usage_text() {
    for args in [vec!["frobnicate"], vec!["expand", "--bogus"], vec![], vec!["expand", "--config", "x.json"]] {
        let o = revgas(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.starts_with("error stage=usage: "), "{err}");
        assert!(err.contains("Usage:"));
    }
    assert_eq!(revgas(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_errors_exit_three_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let bad = write_config(dir.path(), "bad.json", &common::with(common::gas(20, 10, 1, 1), "dt", json!(-1)));
    let o = revgas(&["expand", "--config", &bad, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let line = stderr_line(&o);
    assert!(line.starts_with("error stage=config: ") && line.contains("dt"), "{line}");
    assert_eq!(String::from_utf8_lossy(&o.stderr).lines().count(), 1);

    let missing = dir.path().join("absent.json");
    let o = revgas(&["expand", "--config", missing.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr_line(&o).contains("--config"));

    let mut float = common::gas(20, 10, 1, 1);
    float["mode"] = json!("float_reference");
    let a = write_config(dir.path(), "a.json", &common::gas(20, 10, 1, 1));
    let f = write_config(dir.path(), "f.json", &float);
    let o = revgas(&["sync", "--config", &a, "--config-b", &f, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr_line(&o).contains("mode"));
}

#[test]
fn runtime_errors_exit_four_naming_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let cfg = write_config(dir.path(), "c.json", &common::gas(20, 10, 1, 1));
    let o = revgas(&["recurrence", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr_line(&o).starts_with("error stage=recurrence: "));

    let crowded = write_config(dir.path(), "p.json", &common::with(common::gas(20, 10, 1, 1), "n_particles", json!(5000)));
    let o = revgas(&["expand", "--config", &crowded, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr_line(&o).starts_with("error stage=expand: "), "{}", stderr_line(&o));

    let file = dir.path().join("plain");
    fs::write(&file, "x").unwrap();
    let o = revgas(&["expand", "--config", &cfg, "--out", file.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr_line(&o).starts_with("error stage=output: "));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        revgas::config::parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 4);
}
