use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use aoi_select::experiment::{run_experiment, validate_config, ExperimentConfig, RunOptions};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aoi-select"))
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs").join(name)
}

fn write_config(dir: &TempDir, text: &str) -> PathBuf {
    let path = dir.path().join("config.json");
    fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

const SMALL: &str = r#"{
  "experiment": "sigma",
  "population": { "n": 30, "size_model": { "kind": "zipf", "a": 2.0, "d_min": 5 } },
  "policies": [
    { "kind": "random_weighted", "m": 5 },
    { "kind": "probabilistic", "m": 5 },
    { "kind": "markov_optimal", "m": 5 },
    { "kind": "markov_monotone", "m": 5 }
  ],
  "markov": { "m_prime": 8 },
  "rounds": 200,
  "seeds": [3, 1, 2]
}"#;

#[test]
fn validate_accepts_shipped_configs() {
    for name in ["sigma_zipf.json", "intervals.json", "stability.json", "train_dirichlet.json", "markov_analyze.json"] {
        let path = config_path(name);
        let out = run(&["validate", "--config", path.to_str().unwrap()]);
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        let printed = ExperimentConfig::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
        assert_eq!(printed, validate_config(&path).unwrap());
    }
}

#[test]
fn validate_reports_m_above_n() {
    let dir = TempDir::new().unwrap();
    let path = write_config(&dir, &SMALL.replace("\"m\": 5 },\n    { \"kind\": \"probabilistic\"", "\"m\": 150 },\n    { \"kind\": \"probabilistic\""));
    let out = run(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("policies[0].m") && err.contains("m exceeds n"), "{err}");
}

#[test]
fn validate_rejects_empty_policies() {
    let dir = TempDir::new().unwrap();
    let text = r#"{"experiment": "sigma", "population": {"n": 10, "size_model": {"kind": "homogeneous"}},
                   "policies": [], "rounds": 10, "seeds": [1]}"#;
    let path = write_config(&dir, text);
    let out = run(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("policies"));
}

#[test]
fn validate_rejects_light_tailed_zipf() {
    let dir = TempDir::new().unwrap();
    let path = write_config(&dir, &SMALL.replace("\"a\": 2.0", "\"a\": 0.9"));
    let out = run(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("shape must exceed 1"));
}

#[test]
fn syntax_errors_and_missing_files_are_config_errors() {
    let dir = TempDir::new().unwrap();
    let path = write_config(&dir, "{\n  \"experiment\": \"sigma\",\n  oops\n}");
    let out = run(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    let out = run(&["validate", "--config", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn markov_subcommand_prints_report() {
    let out = run(&["markov", "--n", "100", "--m", "15", "--mprime", "10"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["variance"].as_f64().unwrap() - 2.0 / 9.0).abs() < 1e-12);
    assert_eq!(v["regime"], "large_max_age");

    let out = run(&["markov", "--n", "100", "--m", "15", "--mprime", "10", "--monotone"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["pi"][0].as_f64().unwrap() - 0.15).abs() < 1e-9);

    let out = run(&["markov", "--n", "10", "--m", "9", "--mprime", "1", "--monotone"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = TempDir::new().unwrap();
    let path = write_config(&dir, SMALL);
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = run(&["run", "--config", path.to_str().unwrap(), "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

fn csv_bodies(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn runs_are_byte_identical_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let path = write_config(&dir, SMALL);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, threads) in [(&a, "1"), (&b, "4")] {
        let status = run(&["run", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", threads]);
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    }
    let (fa, fb) = (csv_bodies(&a), csv_bodies(&b));
    assert_eq!(fa.len(), 2);
    assert_eq!(fa, fb);

    let sigma = String::from_utf8(fa.iter().find(|f| f.0 == "sigma.csv").unwrap().1.clone()).unwrap();
    let mut lines = sigma.lines();
    assert_eq!(lines.next(), Some("round,policy,seed,sigma_running,sigma_exact"));
    assert_eq!(sigma.lines().count(), 1 + 4 * 3 * 200);
    // rows follow config order of policies and seeds
    assert!(lines.next().unwrap().starts_with("0,random_weighted,3,"));

    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["schema_version"], 1);
    assert_eq!(manifest["config"]["rounds"], 200);
}

#[test]
fn seed_override_replaces_seed_list() {
    let dir = TempDir::new().unwrap();
    let cfg = ExperimentConfig::from_json(SMALL).unwrap();
    let opts = RunOptions {
        out: Some(dir.path().to_path_buf()),
        threads: Some(2),
        seed_override: Some(42),
    };
    run_experiment(&cfg, &opts).unwrap();
    let summary = fs::read_to_string(dir.path().join("sigma_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 5);
    assert!(summary.lines().skip(1).all(|l| l.split(',').nth(1) == Some("42")));
}

#[test]
fn every_experiment_kind_writes_its_artifacts() {
    let cases = [
        ("intervals", r#""windows": [], "rounds": 300"#, vec!["intervals.csv"]),
        ("stability", r#""windows": [10, 50], "rounds": 300"#, vec!["stability.csv"]),
        ("markov-analyze", r#""rounds": 1"#, vec!["markov.json"]),
        (
            "train",
            r#""rounds": 20,
               "task": {"dim": 4, "heterogeneity": {"dirichlet": {"alpha": 0.3}}},
               "training": {"local_steps": 2, "lr_schedule": {"decay": {"eta0": 0.1, "rate": 0.99}}, "noise_sigma": 0.1}"#,
            vec!["train.csv", "train_summary.csv"],
        ),
    ];
    for (kind, extra, files) in cases {
        let text = format!(
            r#"{{"experiment": "{kind}",
                "population": {{"n": 20, "size_model": {{"kind": "homogeneous", "d": 2}}}},
                "policies": [{{"kind": "random_weighted", "m": 4}}, {{"kind": "markov_optimal", "m": 4}}],
                "markov": {{"m_prime": 6}},
                {extra},
                "seeds": [1, 2]}}"#
        );
        let cfg = ExperimentConfig::from_json(&text).unwrap_or_else(|e| panic!("{kind}: {e}"));
        let first = TempDir::new().unwrap();
        let second = TempDir::new().unwrap();
        for dir in [&first, &second] {
            let opts = RunOptions {
                out: Some(dir.path().to_path_buf()),
                ..RunOptions::default()
            };
            let summary = run_experiment(&cfg, &opts).unwrap();
            for f in &files {
                assert!(summary.files.iter().any(|s| s == f), "{kind}: {f} missing");
            }
        }
        assert_eq!(csv_bodies(first.path()), csv_bodies(second.path()), "{kind}");
    }
}
