use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use distrl_core::envs::suite::{builtin, EnvParams};
use distrl_core::envs::Policy;
use serde_json::Value;
use tempfile::TempDir;

const SMOKE: &str = r#"
seed = 7
checkpoint_every = 50

[env]
name = "chain"

[train]
algorithm = "ign"
total_steps = 100
learning_starts = 20
metrics_every = 25
oracle_samples = 64

[train.target]
kind = "evaluate"
policy = { kind = "uniform" }

[train.quantile]
embed_dim = 8
cosine_basis = 8
width = 16
batch_size = 16

[gan]
batch_size = 16
width = 16
n_critic = 2

[eval]
schedule = [0, 40]
samples = 64
"#;

fn distrl(args: &[&str], root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_distrl"))
        .args(args)
        .env("DISTRL_OUTPUT_ROOT", root)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p
}

fn lines(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn missing_seed_names_the_field() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &SMOKE.replace("seed = 7", ""));
    let out = distrl(&["train", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("seed"), "{}", stderr(&out));
}

#[test]
fn invalid_config_lists_every_violation() {
    let tmp = TempDir::new().unwrap();
    let text = SMOKE.replace("seed = 7", "").replace("n_critic = 2", "n_critic = 0");
    let cfg = write_config(tmp.path(), &text);
    let out = distrl(&["train", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("seed") && err.contains("n_critic"), "{err}");
}

#[test]
fn smoke_run_writes_artifacts() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMOKE);
    let out = distrl(&["train", cfg.to_str().unwrap(), "--output", "smoke"], tmp.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let dir = tmp.path().join("smoke");
    let metrics = lines(&dir.join("metrics.jsonl"));
    assert!(metrics.len() >= 2, "header plus at least one record");
    assert_eq!(metrics[0]["kind"], "metrics");
    assert!(metrics[0]["format_version"].is_number());
    assert!(metrics[0]["config_hash"].as_str().is_some_and(|h| !h.is_empty()));
    assert!(metrics[1]["w1_to_oracle"].is_number());
    assert!(dir.join("checkpoint.json").exists());
    assert!(dir.join("checkpoints/step-00000050.json").exists());
    assert!(dir.join("checkpoints/step-00000100.json").exists());
    let resolved = fs::read_to_string(dir.join("config.resolved.toml")).unwrap();
    assert!(resolved.contains("lambda"), "defaults are materialized");
}

#[test]
fn identical_runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMOKE);
    for name in ["a", "b"] {
        let out = distrl(&["train", cfg.to_str().unwrap(), "--output", name], tmp.path());
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let a = fs::read(tmp.path().join("a/metrics.jsonl")).unwrap();
    let b = fs::read(tmp.path().join("b/metrics.jsonl")).unwrap();
    assert_eq!(a, b);
    let a = fs::read(tmp.path().join("a/checkpoint.json")).unwrap();
    let b = fs::read(tmp.path().join("b/checkpoint.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn resolved_snapshot_reproduces_the_run() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMOKE);
    let out = distrl(
        &["train", cfg.to_str().unwrap(), "--output", "orig", "--set", "train.total_steps=80"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let snapshot = tmp.path().join("orig/config.resolved.toml");
    let out = distrl(&["train", snapshot.to_str().unwrap(), "--output", "again"], tmp.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(
        fs::read(tmp.path().join("orig/metrics.jsonl")).unwrap(),
        fs::read(tmp.path().join("again/metrics.jsonl")).unwrap()
    );
    assert_eq!(
        fs::read(&snapshot).unwrap(),
        fs::read(tmp.path().join("again/config.resolved.toml")).unwrap()
    );
}

#[test]
fn evaluate_same_checkpoint_gives_zero_distances() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMOKE);
    assert!(distrl(&["train", cfg.to_str().unwrap(), "--output", "run"], tmp.path()).status.success());
    let ck = tmp.path().join("run/checkpoint.json");
    let out = distrl(
        &[
            "evaluate",
            cfg.to_str().unwrap(),
            "--fixed",
            ck.to_str().unwrap(),
            "--online",
            ck.to_str().unwrap(),
            "--output",
            "eval",
        ],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let recs = lines(&tmp.path().join("eval/eval.jsonl"));
    assert_eq!(recs[0]["kind"], "eval");
    assert!(recs.len() > 1);
    for r in &recs[1..] {
        assert_eq!(r["w1"].as_f64(), Some(0.0), "{r}");
        assert_eq!(r["w2"].as_f64(), Some(0.0), "{r}");
    }
}

#[test]
fn evaluate_trained_against_untrained_is_positive() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMOKE);
    assert!(distrl(&["train", cfg.to_str().unwrap(), "--output", "run"], tmp.path()).status.success());
    let trained = tmp.path().join("run/checkpoint.json");
    let out = distrl(
        &["evaluate", cfg.to_str().unwrap(), "--fixed", trained.to_str().unwrap(), "--output", "eval"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let recs = lines(&tmp.path().join("eval/eval.jsonl"));
    assert_eq!(recs[1]["step"], 0);
    assert!(recs[1]["w1"].as_f64().unwrap() > 0.0);
}

#[test]
fn missing_checkpoint_reports_the_path() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMOKE);
    let missing = tmp.path().join("nowhere/checkpoint.json");
    let out = distrl(
        &["evaluate", cfg.to_str().unwrap(), "--fixed", missing.to_str().unwrap()],
        tmp.path(),
    );
    assert!(!out.status.success());
    assert!(stderr(&out).contains(missing.to_str().unwrap()), "{}", stderr(&out));
}

#[test]
fn checkpoint_from_another_environment_is_incompatible() {
    let tmp = TempDir::new().unwrap();
    let coin = write_config(tmp.path(), &SMOKE.replace("name = \"chain\"", "name = \"coin\""));
    assert!(distrl(&["train", coin.to_str().unwrap(), "--output", "coin"], tmp.path()).status.success());
    let chain = tmp.path().join("chain.toml");
    fs::write(&chain, SMOKE).unwrap();
    let ck = tmp.path().join("coin/checkpoint.json");
    let out = distrl(
        &["evaluate", chain.to_str().unwrap(), "--fixed", ck.to_str().unwrap(), "--output", "e"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
}

fn oracle_records(tmp: &Path, args: &[&str]) -> Vec<Value> {
    let mut full = vec!["oracle"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", "oracle"]);
    let out = distrl(&full, tmp);
    assert!(out.status.success(), "{}", stderr(&out));
    let recs = lines(&tmp.join("oracle/oracle.jsonl"));
    assert_eq!(recs[0]["kind"], "oracle");
    assert!(recs[1]["tail_bound"].is_number());
    recs[2..].to_vec()
}

#[test]
fn oracle_coin_is_plus_minus_one() {
    let tmp = TempDir::new().unwrap();
    let recs = oracle_records(tmp.path(), &["--env", "coin"]);
    let flips: Vec<&Value> = recs.iter().filter(|r| r["state"] == 0).collect();
    assert_eq!(flips.len(), 2);
    for r in flips {
        let support: Vec<(f64, f64)> = serde_json::from_value(r["support"].clone()).unwrap();
        assert_eq!(support, vec![(-1.0, 0.5), (1.0, 0.5)]);
    }
}

#[test]
fn oracle_self_loop_single_atom() {
    let tmp = TempDir::new().unwrap();
    let recs = oracle_records(tmp.path(), &["--env", "self-loop", "--gamma", "0.5", "--tolerance", "1e-6"]);
    assert_eq!(recs.len(), 1);
    let support: Vec<(f64, f64)> = serde_json::from_value(recs[0]["support"].clone()).unwrap();
    assert_eq!(support.len(), 1);
    assert!((support[0].0 - 2.0).abs() <= 1e-6, "{support:?}");
}

/// Q^pi by iterating the policy-evaluation fixed point to convergence.
fn policy_q(name: &str, params: &EnvParams) -> Vec<Vec<f64>> {
    let spec = builtin(name, params).unwrap();
    let (ns, na) = (spec.num_states(), spec.num_actions());
    let pi = Policy::uniform(ns, na);
    let mut q = vec![vec![0.0; na]; ns];
    for _ in 0..2000 {
        let v: Vec<f64> = (0..ns)
            .map(|s| {
                if spec.is_absorbing(s) {
                    0.0
                } else {
                    (0..na).map(|a| pi.prob(s, a) * q[s][a]).sum()
                }
            })
            .collect();
        q = (0..ns)
            .map(|s| {
                (0..na)
                    .map(|a| {
                        let next: f64 = spec.transition_row(s, a).iter().zip(&v).map(|(p, v)| p * v).sum();
                        spec.mean_reward(s, a) + spec.gamma() * next
                    })
                    .collect()
            })
            .collect();
    }
    q
}

#[test]
fn oracle_chain_means_match_policy_evaluation() {
    let tmp = TempDir::new().unwrap();
    let recs = oracle_records(tmp.path(), &["--env", "chain", "--tolerance", "1e-8"]);
    let q = policy_q("chain", &EnvParams::default());
    let mut checked = 0;
    for r in &recs {
        let (s, a) = (r["state"].as_u64().unwrap() as usize, r["action"].as_u64().unwrap() as usize);
        let mean = r["mean"].as_f64().unwrap();
        assert!((mean - q[s][a]).abs() <= 1e-6, "({s},{a}): {mean} vs {}", q[s][a]);
        checked += 1;
    }
    assert_eq!(checked, q.len() * q[0].len());
}

#[test]
fn oracle_rejects_bad_policy() {
    let tmp = TempDir::new().unwrap();
    let out = distrl(&["oracle", "--env", "coin", "--policy", "greedy"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mc_estimate_writes_summary_and_histogram() {
    let tmp = TempDir::new().unwrap();
    let out = distrl(
        &["mc-estimate", "--env", "coin", "--rollouts", "4000", "--seed", "3", "--bins", "10", "--out", "mc"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let summary = lines(&tmp.path().join("mc/mc-summary.jsonl"));
    assert_eq!(summary[0]["kind"], "mc-summary");
    for r in &summary[1..] {
        let se = r["std_err"].as_f64().unwrap();
        assert!(r["mean"].as_f64().unwrap().abs() <= 4.0 * se + 1e-12, "{r}");
    }
    let hist = lines(&tmp.path().join("mc/mc-histogram.jsonl"));
    assert_eq!(hist[0]["kind"], "mc-histogram");
    assert_eq!(hist.len() - 1, 2 * 10);
}
