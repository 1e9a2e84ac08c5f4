use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::distributions::wasserstein;
use crate::envs::MdpSpec;
use crate::error::{Error, Result};
use crate::evaluation::{OwnedModel, ReturnModel};
use crate::rng::stream;

/// Largest probe set before probes are subsampled.
pub const MAX_PROBES: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Samples drawn per probe from each representation.
    pub samples: usize,
    /// Level reported as `q_tau_hat`.
    pub tau: f64,
    /// Environment steps at which the online side is measured.
    pub schedule: Vec<u64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            samples: 2048,
            tau: 0.5,
            schedule: vec![0],
        }
    }
}

impl EvalConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.samples == 0 {
            v.push("eval.samples must be at least 1".to_string());
        }
        if !(0.0..=1.0).contains(&self.tau) {
            v.push(format!("eval.tau must lie in [0, 1], got {}", self.tau));
        }
        if self.schedule.is_empty() {
            v.push("eval.schedule must list at least one step".to_string());
        }
        if self.schedule.windows(2).any(|w| w[0] >= w[1]) {
            v.push("eval.schedule must be strictly increasing".to_string());
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v.join("; ")))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub step: u64,
    pub probe_id: usize,
    pub state: usize,
    pub action: usize,
    pub w1: f64,
    pub w2: f64,
    pub mean_gap: f64,
    pub v_hat: f64,
    pub q_tau_hat: f64,
    pub var_hat: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub records: Vec<EvalRecord>,
}

impl EvalReport {
    /// Mean `W1` over probes at `step`.
    pub fn mean_w1(&self, step: u64) -> Option<f64> {
        let v: Vec<f64> = self.records.iter().filter(|r| r.step == step).map(|r| r.w1).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn steps(&self) -> Vec<u64> {
        let mut s: Vec<u64> = self.records.iter().map(|r| r.step).collect();
        s.dedup();
        s
    }
}

/// All `(s, a)` with `s` non-absorbing, or `MAX_PROBES` of them chosen once from the seed.
pub fn probe_set(spec: &MdpSpec, seed: u64) -> Vec<(usize, usize)> {
    let all: Vec<(usize, usize)> = (0..spec.num_states())
        .filter(|&s| !spec.is_absorbing(s))
        .flat_map(|s| (0..spec.num_actions()).map(move |a| (s, a)))
        .collect();
    if all.len() <= MAX_PROBES {
        return all;
    }
    let mut rng = stream(seed, "probes", 0);
    let mut picked: Vec<usize> = index::sample(&mut rng, all.len(), MAX_PROBES).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| all[i]).collect()
}

/// Compare two representations on every probe. Both sides draw from the
/// same per-probe stream, so identical models give identical samples.
pub fn compare_models(
    spec: &MdpSpec,
    fixed: &ReturnModel,
    online: &ReturnModel,
    probes: &[(usize, usize)],
    step: u64,
    cfg: &EvalConfig,
    seed: u64,
) -> Result<Vec<EvalRecord>> {
    let mut out = Vec::with_capacity(probes.len());
    for (id, &(s, a)) in probes.iter().enumerate() {
        if s >= spec.num_states() || a >= spec.num_actions() {
            return Err(Error::Config(format!("probe ({s}, {a}) is outside the environment")));
        }
        let f = fixed.distribution(spec, s, a, cfg.samples, &mut stream(seed, "eval", id as u64))?;
        let o = online.distribution(spec, s, a, cfg.samples, &mut stream(seed, "eval", id as u64))?;
        out.push(EvalRecord {
            step,
            probe_id: id,
            state: s,
            action: a,
            w1: wasserstein(&f, &o, 1)?,
            w2: wasserstein(&f, &o, 2)?,
            mean_gap: (o.mean() - f.mean()).abs(),
            v_hat: o.mean(),
            q_tau_hat: o.quantile(cfg.tau)?,
            var_hat: o.variance(),
        });
    }
    Ok(out)
}

/// The online side of a fixed-policy evaluation: something that can move
/// forward in training and be measured.
pub trait OnlineSource {
    /// Train (or otherwise advance) until environment step `step`.
    fn advance_to(&mut self, step: u64) -> Result<()>;
    fn model(&self) -> ReturnModel<'_>;
}

/// A model that never changes.
pub struct StaticSource(pub OwnedModel);

impl OnlineSource for StaticSource {
    fn advance_to(&mut self, _step: u64) -> Result<()> {
        Ok(())
    }

    fn model(&self) -> ReturnModel<'_> {
        self.0.as_model()
    }
}

/// Measure `online` against `fixed` at each scheduled step.
pub fn evaluate_fixed(
    spec: &MdpSpec,
    fixed: &ReturnModel,
    online: &mut dyn OnlineSource,
    cfg: &EvalConfig,
    seed: u64,
) -> Result<EvalReport> {
    cfg.validate()?;
    let probes = probe_set(spec, seed);
    let mut report = EvalReport::default();
    for &step in &cfg.schedule {
        online.advance_to(step)?;
        let model = online.model();
        report
            .records
            .extend(compare_models(spec, fixed, &model, &probes, step, cfg, seed)?);
    }
    Ok(report)
}
