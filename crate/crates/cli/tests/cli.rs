use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fogdeploy::workload::{generate_sweep, GeneratorConfig, Range};
use fogdeploy::SsrBucket;

fn fogdeploy(args: &[&str], config: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fogdeploy"));
    cmd.env_remove("FOGDEPLOY_CONFIG");
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// A config small enough to train in well under a second.
fn tiny_config(dir: &Path, extra_experiment: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    let text = format!(
        r#"{{
  "generator": {{ "seed": 9 }},
  "agent": {{ "episodes": 6, "hidden": [8], "batch_size": 8, "warmup": 8 }},
  "experiment": {{ "sweep": [10], "env": {{ "max_functions": 10 }}{extra_experiment} }}
}}"#
    );
    fs::write(&path, text).unwrap();
    path
}

fn write_bucket(path: &Path, bucket: &SsrBucket) {
    fs::write(path, bucket.to_json().unwrap()).unwrap();
}

#[test]
fn generate_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = fogdeploy(&["--seed", "17", "generate", "--out", out.to_str().unwrap()], None);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(String::from_utf8_lossy(&o.stdout).contains("valid"));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let bucket = SsrBucket::from_json(&fs::read_to_string(&a).unwrap()).unwrap();
    assert!(bucket.ssrs.iter().all(|s| !s.functions.is_empty()));

    let c = dir.path().join("c.json");
    let o = fogdeploy(&["--seed", "18", "generate", "--out", c.to_str().unwrap(), "--total", "55"], None);
    assert!(o.status.success());
    let bucket = SsrBucket::from_json(&fs::read_to_string(&c).unwrap()).unwrap();
    assert_eq!(bucket.total_functions(), 55);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{ not json").unwrap();
    let out = dir.path().join("b.json");
    let o = fogdeploy(&["generate", "--out", out.to_str().unwrap()], Some(&cfg));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("error"));
    assert!(!out.exists());

    let o = fogdeploy(&["frobnicate"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_path_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"experiment": {"runs_per_point": 0}}"#).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_fogdeploy"))
        .env("FOGDEPLOY_CONFIG", &cfg)
        .arg("validate")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("runs_per_point"));
}

#[test]
fn zero_episode_training_writes_initial_network() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), "");
    let out = dir.path().join("run");
    let o = fogdeploy(&["train", "--episodes", "0", "--out", out.to_str().unwrap()], Some(&cfg));
    assert!(o.status.success(), "{}", stderr(&o));
    let log = fs::read_to_string(out.join("training_log.csv")).unwrap();
    assert_eq!(log, "episode,total_cost,epsilon,loss\n");
    assert!(out.join("checkpoint.json").exists());
}

#[test]
fn training_is_reproducible_and_finite() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), "");
    let mut ckpts = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = fogdeploy(&["train", "--out", out.to_str().unwrap()], Some(&cfg));
        assert!(o.status.success(), "{}", stderr(&o));
        ckpts.push(fs::read(out.join("checkpoint.json")).unwrap());
        let log = fs::read_to_string(out.join("training_log.csv")).unwrap();
        let mut rd = csv::Reader::from_reader(log.as_bytes());
        let rows: Vec<_> = rd.records().map(Result::unwrap).collect();
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|r| r[1].parse::<f64>().unwrap().is_finite()));
    }
    assert_eq!(ckpts[0], ckpts[1]);
}

#[test]
fn compare_writes_documented_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    fs::write(
        &cfg,
        r#"{"experiment": {"algorithms": ["cloud_only", "fog_first"], "runs_per_point": 5}}"#,
    )
    .unwrap();
    let out = dir.path().join("res");
    let o = fogdeploy(&["compare", "--out", out.to_str().unwrap()], Some(&cfg));
    assert!(o.status.success(), "{}", stderr(&o));
    let detail = fs::read(out.join("results.csv")).unwrap();
    let mut rd = csv::Reader::from_reader(detail.as_slice());
    let header = rd.headers().unwrap().clone();
    assert_eq!(&header[0], "total_functions");
    assert_eq!(&header[1], "algorithm");
    assert_eq!(&header[2], "run");
    let frac = header.iter().position(|h| h == "fog_fraction").unwrap();
    let rows: Vec<_> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 100);
    for r in &rows {
        r[0].parse::<usize>().unwrap();
        r[2].parse::<usize>().unwrap();
        if &r[1] == "cloud_only" {
            assert_eq!(r[frac].parse::<f64>().unwrap(), 0.0);
        }
    }
    let mean = fs::read_to_string(out.join("results_mean.csv")).unwrap();
    assert_eq!(mean.lines().count(), 1 + 20);

    // same seeds, same bytes
    let again = dir.path().join("res2");
    let o = fogdeploy(&["compare", "--out", again.to_str().unwrap()], Some(&cfg));
    assert!(o.status.success());
    assert_eq!(detail, fs::read(again.join("results.csv")).unwrap());
}

#[test]
fn compare_with_agent_needs_a_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), r#", "algorithms": ["dqn"], "runs_per_point": 2"#);
    let missing = dir.path().join("nope.json");
    let o = fogdeploy(&["compare", "--checkpoint", missing.to_str().unwrap()], Some(&cfg));
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("checkpoint"));

    let run = dir.path().join("run");
    let o = fogdeploy(&["train", "--out", run.to_str().unwrap()], Some(&cfg));
    assert!(o.status.success(), "{}", stderr(&o));
    let o = fogdeploy(
        &[
            "compare",
            "--checkpoint",
            run.join("checkpoint.json").to_str().unwrap(),
            "--out",
            run.to_str().unwrap(),
        ],
        Some(&cfg),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(run.join("results.csv")).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().skip(1).all(|l| l.starts_with("10,dqn,")));
}

#[test]
fn oracle_reports_and_enforces_the_size_limit() {
    let dir = tempfile::tempdir().unwrap();
    let single = generate_sweep(
        &GeneratorConfig {
            input_size: Range::new(2000.0, 2500.0),
            sweep_ssrs: 1,
            sweep_max_per_ssr: 1,
            ..GeneratorConfig::default()
        },
        1,
    )
    .unwrap();
    let path = dir.path().join("one.json");
    write_bucket(&path, &single);
    let o = fogdeploy(&["oracle", path.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["criteria_agree"], serde_json::Value::Bool(true));
    assert_eq!(report["optimum"]["feasible_placements"], 1);

    let big = generate_sweep(&GeneratorConfig::default(), 15).unwrap();
    let path = dir.path().join("big.json");
    write_bucket(&path, &big);
    let o = fogdeploy(&["oracle", path.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("14"));
}

#[test]
fn validate_flags_broken_buckets() {
    let dir = tempfile::tempdir().unwrap();
    let good = generate_sweep(&GeneratorConfig::default(), 12).unwrap();
    let path = dir.path().join("good.json");
    write_bucket(&path, &good);
    let o = fogdeploy(&["validate", path.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", stderr(&o));

    let mut doc: serde_json::Value = serde_json::from_str(&good.to_json().unwrap()).unwrap();
    doc["ssrs"][0]["functions"] = serde_json::Value::Array(vec![]);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, doc.to_string()).unwrap();
    let o = fogdeploy(&["validate", bad.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("empty SSR"));
}
