use std::fs;
use std::path::{Path, PathBuf};

use distrl_core::envs::suite::{builtin, EnvParams};
use distrl_core::envs::{Env, PolicySpec};
use distrl_core::evaluation::{
    evaluate_fixed, exact_distribution, histogram, monte_carlo_estimate, truncation_horizon, ExactReturnDistribution,
    OnlineSource, OwnedModel, StaticSource,
};
use distrl_core::networks::Checkpoint;
use distrl_core::records::{content_hash, write_records, Header, RecordWriter};
use distrl_core::rng::stream;
use distrl_core::trainer::Trainer;
use distrl_core::{Error, Result};
use serde::Serialize;

use crate::config::{resolve_output, RunConfig};

pub const RESOLVED_CONFIG: &str = "config.resolved.toml";
pub const METRICS_FILE: &str = "metrics.jsonl";
pub const FINAL_CHECKPOINT: &str = "checkpoint.json";
pub const ABORT_CHECKPOINT: &str = "checkpoint.abort.json";
pub const EVAL_FILE: &str = "eval.jsonl";
pub const ORACLE_FILE: &str = "oracle.jsonl";
pub const MC_SUMMARY_FILE: &str = "mc-summary.jsonl";
pub const MC_HISTOGRAM_FILE: &str = "mc-histogram.jsonl";

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", dir.display()))))
}

fn oracle_for(cfg: &RunConfig) -> Result<Option<ExactReturnDistribution>> {
    if !cfg.oracle.enabled {
        return Ok(None);
    }
    let spec = cfg.spec()?;
    let policy = cfg.oracle_policy().resolve(&spec)?;
    match exact_distribution(&spec, &policy, cfg.oracle.tolerance) {
        Ok(o) => Ok(Some(o)),
        Err(Error::Infeasible { limit, horizon }) => {
            eprintln!("note: exact oracle skipped (more than {limit} paths at horizon {horizon})");
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Train per `cfg` into `out`. Returns the output directory.
pub fn train(cfg: &RunConfig, out: &Path) -> Result<PathBuf> {
    cfg.validate()?;
    create_dir(out)?;
    fs::write(out.join(RESOLVED_CONFIG), cfg.to_toml()?)?;
    let spec = cfg.spec()?;
    let mut trainer = Trainer::new(spec, cfg.train.clone(), cfg.gan_config(), cfg.seed())?;
    if let Some(o) = oracle_for(cfg)? {
        trainer.set_oracle(o);
    }
    let hash = trainer.config_hash().to_string();
    let mut metrics = RecordWriter::create(out.join(METRICS_FILE), &Header::new("metrics", hash))?;
    let ck_dir = out.join("checkpoints");
    if cfg.checkpoint_every > 0 {
        create_dir(&ck_dir)?;
    }
    let total = cfg.train.total_steps;
    let mut next_ck = cfg.checkpoint_every;
    let result = (|| -> Result<()> {
        while trainer.steps() < total {
            if let Some(rec) = trainer.step()? {
                metrics.write(&rec)?;
            }
            if cfg.checkpoint_every > 0 && trainer.steps() == next_ck {
                trainer
                    .checkpoint()
                    .save(ck_dir.join(format!("step-{:08}.json", trainer.steps())))?;
                next_ck += cfg.checkpoint_every;
            }
        }
        Ok(())
    })();
    metrics.finish()?;
    if let Err(e) = result {
        trainer.checkpoint().save(out.join(ABORT_CHECKPOINT))?;
        return Err(e);
    }
    trainer.checkpoint().save(out.join(FINAL_CHECKPOINT))?;
    Ok(out.to_path_buf())
}

/// Where the Q-Fixed side comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum FixedSource {
    Exact,
    Checkpoint(PathBuf),
}

impl FixedSource {
    pub fn parse(s: &str) -> Self {
        if s == "exact" {
            FixedSource::Exact
        } else {
            FixedSource::Checkpoint(PathBuf::from(s))
        }
    }
}

pub fn evaluate(cfg: &RunConfig, fixed: &FixedSource, online: Option<&Path>, out: &Path) -> Result<PathBuf> {
    cfg.validate()?;
    let spec = cfg.spec()?;
    let seed = cfg.seed();
    let fixed_model = match fixed {
        FixedSource::Exact => {
            let policy = cfg.oracle_policy().resolve(&spec)?;
            OwnedModel::Exact(exact_distribution(&spec, &policy, cfg.oracle.tolerance)?)
        }
        FixedSource::Checkpoint(p) => OwnedModel::from_checkpoint(&Checkpoint::load(p)?, &spec)?,
    };
    let mut source: Box<dyn OnlineSource> = match online {
        Some(p) => Box::new(StaticSource(OwnedModel::from_checkpoint(&Checkpoint::load(p)?, &spec)?)),
        None => Box::new(Trainer::new(spec.clone(), cfg.train.clone(), cfg.gan_config(), seed)?),
    };
    let report = evaluate_fixed(&spec, &fixed_model.as_model(), source.as_mut(), &cfg.eval, seed)?;
    create_dir(out)?;
    fs::write(out.join(RESOLVED_CONFIG), cfg.to_toml()?)?;
    let hash = content_hash(&(cfg, fixed_label(fixed), online.map(|p| p.display().to_string())));
    write_records(out.join(EVAL_FILE), &Header::new("eval", hash), &report.records)?;
    for step in report.steps() {
        println!("step {step}: mean W1 {:.6}", report.mean_w1(step).unwrap_or(f64::NAN));
    }
    Ok(out.to_path_buf())
}

fn fixed_label(f: &FixedSource) -> String {
    match f {
        FixedSource::Exact => "exact".into(),
        FixedSource::Checkpoint(p) => p.display().to_string(),
    }
}

/// Command-line policy syntax: `uniform`, `optimal` or `biased:ACTION:P`.
pub fn parse_policy(s: &str) -> Result<PolicySpec> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["uniform"] => Ok(PolicySpec::Uniform),
        ["optimal"] => Ok(PolicySpec::Optimal),
        ["biased", a, p] => Ok(PolicySpec::Biased {
            action: a
                .parse()
                .map_err(|_| Error::Config(format!("policy `{s}`: bad action `{a}`")))?,
            p: p.parse().map_err(|_| Error::Config(format!("policy `{s}`: bad probability `{p}`")))?,
        }),
        _ => Err(Error::Config(format!(
            "policy `{s}` is not `uniform`, `optimal` or `biased:ACTION:P`"
        ))),
    }
}

#[derive(Serialize)]
struct OracleMeta<'a> {
    env: &'a str,
    params: &'a EnvParams,
    policy: &'a PolicySpec,
    tolerance: f64,
    horizon: usize,
    tail_bound: f64,
}

#[derive(Serialize)]
struct OracleRecord<'a> {
    state: usize,
    action: usize,
    mean: f64,
    support: &'a [(f64, f64)],
}

pub fn oracle(env: &str, params: &EnvParams, policy: &PolicySpec, tolerance: f64, out: &Path) -> Result<PathBuf> {
    if !(tolerance > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tolerance}")));
    }
    let spec = builtin(env, params)?;
    let pol = policy.resolve(&spec)?;
    let exact = exact_distribution(&spec, &pol, tolerance)?;
    create_dir(out)?;
    let meta = OracleMeta {
        env,
        params,
        policy,
        tolerance,
        horizon: exact.horizon,
        tail_bound: exact.tail_bound,
    };
    let mut w = RecordWriter::create(out.join(ORACLE_FILE), &Header::new("oracle", content_hash(&meta)))?;
    w.write(&meta)?;
    for s in 0..exact.num_states {
        for a in 0..exact.num_actions {
            w.write(&OracleRecord {
                state: s,
                action: a,
                mean: exact.mean(s, a),
                support: exact.atoms(s, a),
            })?;
        }
    }
    w.finish()?;
    Ok(out.to_path_buf())
}

#[derive(Clone, Debug, Serialize)]
pub struct McSummary {
    pub action: usize,
    pub rollouts: usize,
    pub mean: f64,
    pub std_err: f64,
}

pub struct McRequest<'a> {
    pub env: &'a str,
    pub params: &'a EnvParams,
    pub policy: &'a PolicySpec,
    pub state: usize,
    pub rollouts: usize,
    /// Defaults to the horizon at which the discounted tail drops below 1e-9.
    pub horizon: Option<usize>,
    pub bins: usize,
    pub seed: u64,
}

pub fn mc_estimate(req: &McRequest, out: &Path) -> Result<Vec<McSummary>> {
    let spec = builtin(req.env, req.params)?;
    let policy = req.policy.resolve(&spec)?;
    let horizon = match req.horizon {
        Some(h) => h,
        None => truncation_horizon(spec.gamma(), spec.r_max(), 1e-9)?,
    };
    let mut env = Env::new(spec);
    let mut rng = stream(req.seed, "env", 0);
    let per_action = monte_carlo_estimate(&mut env, &policy, req.state, req.rollouts, horizon, &mut rng)?;
    let summary: Vec<McSummary> = per_action
        .iter()
        .enumerate()
        .map(|(a, d)| McSummary {
            action: a,
            rollouts: d.len(),
            mean: d.mean(),
            std_err: (d.variance() / d.len() as f64).sqrt(),
        })
        .collect();
    create_dir(out)?;
    let hash = content_hash(&(req.env, req.params, req.policy, req.state, req.rollouts, horizon, req.seed));
    write_records(out.join(MC_SUMMARY_FILE), &Header::new("mc-summary", hash.clone()), &summary)?;
    write_records(
        out.join(MC_HISTOGRAM_FILE),
        &Header::new("mc-histogram", hash),
        &histogram(&per_action, req.bins)?,
    )?;
    Ok(summary)
}

/// `dir` relative to `$DISTRL_OUTPUT_ROOT` when that is set.
pub fn output_path(dir: &Path) -> PathBuf {
    resolve_output(dir)
}
