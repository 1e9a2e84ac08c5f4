use std::sync::Arc;
use std::time::Instant;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::envs::planning::argmax;
use crate::envs::{Env, MdpSpec, Policy, Transition};
use crate::error::{Error, Result};
use crate::evaluation::{compare_models, probe_set, EvalConfig, ExactReturnDistribution, OnlineSource, ReturnModel};
use crate::networks::{pair_encoding, Checkpoint, ConditionalArch, QuantileArch, QuantileNetwork};
use crate::records::content_hash;
use crate::rng::{stream, Rng};
use crate::trainer::config::{Algorithm, GanConfig, TargetMode, TrainConfig};
use crate::trainer::gan::{critic_update, generator_update, GanBatch, GanPair};
use crate::trainer::quantile::{eval_levels, quantile_update, Levels, QuantileBatch, QuantileLearner};
use crate::trainer::replay::ReplayBuffer;

/// One line of the metric stream. Losses are means over the update rounds
/// since the previous record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub step: u64,
    pub updates: u64,
    pub episode_return: Option<f64>,
    pub quantile_loss: Option<f64>,
    pub critic_loss: Option<f64>,
    pub generator_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w1_to_oracle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wallclock: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default)]
struct Mean {
    sum: f64,
    n: u64,
}

impl Mean {
    fn add(&mut self, x: f64) {
        self.sum += x;
        self.n += 1;
    }

    fn take(&mut self) -> Option<f64> {
        let out = (self.n > 0).then(|| self.sum / self.n as f64);
        *self = Mean::default();
        out
    }
}

struct Streams {
    env: Rng,
    act: Rng,
    replay: Rng,
    noise: Rng,
    tau: Rng,
}

/// Training engine. Each environment step acts, stores the transition and,
/// on the update schedule, runs `n_critic` critic steps, one generator step
/// and one quantile step.
pub struct Trainer {
    spec: Arc<MdpSpec>,
    cfg: TrainConfig,
    gan_cfg: GanConfig,
    seed: u64,
    config_hash: String,
    env: Env,
    policy: Option<Policy>,
    pub quantile: QuantileLearner,
    pub gan: Option<GanPair>,
    replay: ReplayBuffer,
    rng: Streams,
    states: Vec<Vec<f64>>,
    pairs: Vec<Vec<f64>>,
    step: u64,
    updates: u64,
    state: Option<usize>,
    episode_len: u64,
    episode_return: f64,
    last_return: Option<f64>,
    losses: [Mean; 3],
    oracle: Option<ExactReturnDistribution>,
    /// Only read when `record_wallclock` is on; wasm32 has no clock.
    started: Option<Instant>,
}

/// Architectures the trainer builds for a spec and configuration.
pub fn architectures(spec: &MdpSpec, cfg: &TrainConfig, gan_cfg: &GanConfig) -> (QuantileArch, ConditionalArch, ConditionalArch) {
    let (sd, na) = (spec.state_dim(), spec.num_actions());
    let q = QuantileArch {
        state_dim: sd,
        num_actions: na,
        embed_dim: cfg.quantile.embed_dim,
        cosine_basis: cfg.quantile.cosine_basis,
        width: cfg.quantile.width,
    };
    (
        q,
        ConditionalArch::generator(sd, na, gan_cfg.width),
        ConditionalArch::critic(sd, na, gan_cfg.width),
    )
}

/// Hex SHA-256 over the environment, both configurations and the seed.
pub fn run_hash(spec: &MdpSpec, cfg: &TrainConfig, gan_cfg: &GanConfig, seed: u64) -> String {
    content_hash(&(spec.content_hash(), cfg, gan_cfg, seed))
}

impl Trainer {
    pub fn new(spec: impl Into<Arc<MdpSpec>>, cfg: TrainConfig, gan_cfg: GanConfig, seed: u64) -> Result<Self> {
        let spec: Arc<MdpSpec> = spec.into();
        cfg.validate()?;
        if cfg.algorithm.uses_gan() {
            gan_cfg.validate()?;
        }
        let policy = match &cfg.target {
            TargetMode::Control => None,
            TargetMode::Evaluate { policy } => Some(policy.resolve(&spec)?),
        };
        let (q_arch, g_arch, c_arch) = architectures(&spec, &cfg, &gan_cfg);
        let mut init = stream(seed, "init", 0);
        let mut quantile = QuantileLearner::new(QuantileNetwork::new(q_arch, &mut init)?, cfg.quantile.lr);
        quantile.grad_clip = cfg.grad_clip;
        quantile.freeze(&cfg.freeze.quantile)?;
        let gan = if cfg.algorithm.uses_gan() {
            let mut pair = GanPair::init(g_arch, c_arch, &gan_cfg, &mut init)?;
            pair.grad_clip = cfg.grad_clip;
            pair.freeze(&cfg.freeze)?;
            Some(pair)
        } else {
            None
        };
        let env = Env::sticky(Arc::clone(&spec), cfg.sticky_prob)?;
        let states = (0..spec.num_states()).map(|s| spec.encode_state(s)).collect();
        let pairs = (0..spec.num_states())
            .flat_map(|s| (0..spec.num_actions()).map(move |a| (s, a)))
            .map(|(s, a)| pair_encoding(&spec, s, a))
            .collect();
        let started = cfg.record_wallclock.then(Instant::now);
        Ok(Self {
            config_hash: run_hash(&spec, &cfg, &gan_cfg, seed),
            replay: ReplayBuffer::new(cfg.replay_capacity)?,
            rng: Streams {
                env: stream(seed, "env", 0),
                act: stream(seed, "act", 0),
                replay: stream(seed, "replay", 0),
                noise: stream(seed, "gan-noise", 0),
                tau: stream(seed, "tau", 0),
            },
            spec,
            cfg,
            gan_cfg,
            seed,
            env,
            policy,
            quantile,
            gan,
            states,
            pairs,
            step: 0,
            updates: 0,
            state: None,
            episode_len: 0,
            episode_return: 0.0,
            last_return: None,
            losses: [Mean::default(); 3],
            oracle: None,
            started,
        })
    }

    /// Replace the generator/critic pair (e.g. with a warm-started one).
    pub fn set_gan(&mut self, mut pair: GanPair) -> Result<()> {
        if !self.cfg.algorithm.uses_gan() {
            return Err(Error::Config("this algorithm has no generator/critic pair".into()));
        }
        let (_, g_arch, c_arch) = architectures(&self.spec, &self.cfg, &self.gan_cfg);
        if pair.generator.arch != g_arch || pair.critic.arch != c_arch {
            return Err(Error::Incompatible(format!(
                "pair architectures {:?} / {:?} do not match {g_arch:?} / {c_arch:?}",
                pair.generator.arch, pair.critic.arch
            )));
        }
        pair.grad_clip = self.cfg.grad_clip;
        self.gan = Some(pair);
        Ok(())
    }

    /// Report distance to this oracle in every metric record.
    pub fn set_oracle(&mut self, oracle: ExactReturnDistribution) {
        self.oracle = Some(oracle);
    }

    pub fn spec(&self) -> &MdpSpec {
        &self.spec
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Completed update rounds.
    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn replay_len(&self) -> usize {
        self.replay.len()
    }

    /// The representation used for distances: the generator when there is one.
    pub fn online_model(&self) -> ReturnModel<'_> {
        match &self.gan {
            Some(p) => ReturnModel::Generator(&p.generator),
            None => ReturnModel::Quantile(&self.quantile.online),
        }
    }

    /// Mean `W1` over the probe set between `model` and `oracle`.
    pub fn distance_to(&self, oracle: &ExactReturnDistribution, model: ReturnModel<'_>, samples: usize) -> Result<f64> {
        let probes = probe_set(&self.spec, self.seed);
        let cfg = EvalConfig {
            samples,
            ..EvalConfig::default()
        };
        let recs = compare_models(&self.spec, &ReturnModel::Exact(oracle), &model, &probes, self.step, &cfg, self.seed)?;
        Ok(recs.iter().map(|r| r.w1).sum::<f64>() / recs.len() as f64)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new(self.config_hash.clone(), self.step)
            .with_quantile("quantile", &self.quantile.online)
            .with_quantile("quantile_target", &self.quantile.target);
        if let Some(p) = &self.gan {
            ck = ck.with_conditional("generator", &p.generator).with_conditional("critic", &p.critic);
        }
        ck
    }

    fn action_values(&mut self, s: usize) -> Result<Vec<f64>> {
        let enc = &self.states[s];
        match self.cfg.algorithm {
            Algorithm::Dqn => {
                let q = self.quantile.online.quantile_values(enc, &[0.5])?;
                Ok(q.values().to_vec())
            }
            _ => {
                let k = self.cfg.quantile.action_draws;
                let taus: Vec<f64> = (0..k).map(|_| self.rng.act.gen::<f64>()).collect();
                self.quantile.online.q_value_at(enc, &taus, Default::default())
            }
        }
    }

    fn choose_action(&mut self, s: usize) -> Result<usize> {
        let eps = self.cfg.epsilon.at(self.step);
        let na = self.spec.num_actions();
        if let Some(p) = &self.policy {
            return Ok(p.epsilon_mixed(eps).sample(s, &mut self.rng.act));
        }
        if self.rng.act.gen::<f64>() < eps {
            return Ok(self.rng.act.gen_range(0..na));
        }
        Ok(argmax(&self.action_values(s)?))
    }

    /// Bootstrap actions at each successor state.
    fn next_actions(&mut self, next: &[usize]) -> Result<Vec<usize>> {
        if let Some(p) = &self.policy {
            return Ok(next.iter().map(|&s| p.sample(s, &mut self.rng.replay)).collect());
        }
        let enc: Vec<Vec<f64>> = next.iter().map(|&s| self.states[s].clone()).collect();
        match self.cfg.algorithm {
            Algorithm::Dqn => {
                let q = eval_levels(&self.quantile.online, &enc, &vec![0.5; enc.len()])?;
                Ok((0..enc.len())
                    .map(|b| argmax(&q.values()[b * q.cols()..(b + 1) * q.cols()]))
                    .collect())
            }
            _ => {
                let k = self.cfg.quantile.action_draws;
                crate::trainer::quantile::greedy_actions(&self.quantile.online, &enc, k, &mut self.rng.tau)
            }
        }
    }

    fn gan_batch(&mut self) -> Result<GanBatch> {
        let m = self.gan_cfg.batch_size;
        let ts = self.replay.sample(m, &mut self.rng.replay)?;
        let next: Vec<usize> = ts.iter().map(|t| t.next_state).collect();
        let next_a = self.next_actions(&next)?;
        let na = self.spec.num_actions();
        Ok(GanBatch {
            pairs: ts.iter().map(|t| (t.state, t.action)).collect(),
            cond: ts.iter().map(|t| self.pairs[t.state * na + t.action].clone()).collect(),
            next_cond: ts
                .iter()
                .zip(&next_a)
                .map(|(t, &a)| self.pairs[t.next_state * na + a].clone())
                .collect(),
            rewards: ts.iter().map(|t| t.reward).collect(),
            terminal: ts.iter().map(|t| t.terminal).collect(),
        })
    }

    fn quantile_bootstrap(&mut self, batch: &GanBatch) -> Result<Vec<f64>> {
        // next_cond carries (s', a'); recover both from the encoding layout
        let sd = self.spec.state_dim();
        let mut states = Vec::with_capacity(batch.len());
        let mut actions = Vec::with_capacity(batch.len());
        for c in &batch.next_cond {
            states.push(c[..sd].to_vec());
            actions.push(c[sd..].iter().position(|&v| v == 1.0).unwrap_or(0));
        }
        let taus: Vec<f64> = (0..batch.len()).map(|_| self.rng.tau.gen::<f64>()).collect();
        let q = eval_levels(&self.quantile.target, &states, &taus)?;
        Ok((0..batch.len()).map(|i| q.get(i, actions[i])).collect())
    }

    fn quantile_batch(&mut self) -> Result<QuantileBatch> {
        let ts: Vec<Transition> = self.replay.sample(self.cfg.quantile.batch_size, &mut self.rng.replay)?;
        let next_actions = if self.policy.is_some() {
            let next: Vec<usize> = ts.iter().map(|t| t.next_state).collect();
            Some(self.next_actions(&next)?)
        } else {
            None
        };
        Ok(QuantileBatch {
            states: ts.iter().map(|t| self.states[t.state].clone()).collect(),
            actions: ts.iter().map(|t| t.action).collect(),
            rewards: ts.iter().map(|t| t.reward).collect(),
            next_states: ts.iter().map(|t| self.states[t.next_state].clone()).collect(),
            next_actions,
            terminal: ts.iter().map(|t| t.terminal).collect(),
        })
    }

    fn update_round(&mut self) -> Result<()> {
        let gamma = self.spec.gamma();
        let frac = (self.steps() as f64 / self.cfg.total_steps.max(1) as f64).min(1.0);
        if let (Some(gan), Some(end)) = (self.gan.as_mut(), self.gan_cfg.anneal_to) {
            gan.scale_learning_rates(&self.gan_cfg, 1.0 - (1.0 - end) * frac);
        }
        if self.gan.is_some() {
            for _ in 0..self.gan_cfg.n_critic {
                let batch = self.gan_batch()?;
                let boot = if self.cfg.critic_quantile_targets {
                    Some(self.quantile_bootstrap(&batch)?)
                } else {
                    None
                };
                let gan = self.gan.as_mut().expect("checked");
                let l = critic_update(gan, &batch, &self.gan_cfg, gamma, boot.as_deref(), &mut self.rng.noise)?;
                self.losses[1].add(l);
            }
            let batch = self.gan_batch()?;
            let gan = self.gan.as_mut().expect("checked");
            let l = generator_update(gan, &batch, gamma, &mut self.rng.noise)?;
            self.losses[2].add(l);
        }
        let levels = match self.cfg.algorithm {
            Algorithm::Dqn => Levels::Fixed {
                taus: vec![0.5],
                taus_prime: vec![0.5],
            },
            _ => Levels::Uniform {
                n: self.cfg.loss.n,
                n_prime: self.cfg.loss.n_prime,
            },
        };
        let batch = self.quantile_batch()?;
        let l = quantile_update(&mut self.quantile, &batch, &levels, self.cfg.loss.delta, gamma, &mut self.rng.tau)?;
        self.losses[0].add(l);
        self.updates += 1;
        if self.updates % self.cfg.target_sync == 0 {
            self.quantile.sync_target();
        }
        Ok(())
    }

    fn batch_ready(&self) -> bool {
        let need = if self.gan.is_some() {
            self.gan_cfg.batch_size.max(self.cfg.quantile.batch_size)
        } else {
            self.cfg.quantile.batch_size
        };
        self.replay.len() >= need
    }

    /// Advance one environment step. Returns a metric record when one is due.
    pub fn step(&mut self) -> Result<Option<MetricRecord>> {
        let s = match self.state {
            Some(s) => s,
            None => {
                self.episode_len = 0;
                self.episode_return = 0.0;
                self.env.reset(&mut self.rng.env)
            }
        };
        let a = self.choose_action(s)?;
        let t = self.env.step(s, a, &mut self.rng.env)?.transition;
        self.replay.push(t);
        self.episode_len += 1;
        self.episode_return += t.reward;
        self.state = Some(t.next_state);
        if t.terminal || self.episode_len >= self.cfg.max_episode_len {
            self.last_return = Some(self.episode_return);
            self.state = None;
        }
        self.step += 1;
        if self.step >= self.cfg.learning_starts && self.step % self.cfg.update_period == 0 && self.batch_ready() {
            self.update_round()?;
        }
        if self.step % self.cfg.metrics_every == 0 {
            return Ok(Some(self.record()?));
        }
        Ok(None)
    }

    fn record(&mut self) -> Result<MetricRecord> {
        let w1 = match &self.oracle {
            Some(o) => Some(self.distance_to(o, self.online_model(), self.cfg.oracle_samples)?),
            None => None,
        };
        Ok(MetricRecord {
            step: self.step,
            updates: self.updates,
            episode_return: self.last_return,
            quantile_loss: self.losses[0].take(),
            critic_loss: self.losses[1].take(),
            generator_loss: self.losses[2].take(),
            w1_to_oracle: w1,
            wallclock: self.started.map(|t| t.elapsed().as_secs_f64()),
        })
    }

    /// Step until `step` environment steps have run, feeding every record to `sink`.
    pub fn run_until(&mut self, step: u64, sink: &mut dyn FnMut(&MetricRecord) -> Result<()>) -> Result<()> {
        while self.step < step {
            if let Some(rec) = self.step()? {
                sink(&rec)?;
            }
        }
        Ok(())
    }

    /// Run the configured number of steps.
    pub fn train(&mut self, sink: &mut dyn FnMut(&MetricRecord) -> Result<()>) -> Result<()> {
        self.run_until(self.cfg.total_steps, sink)
    }
}

impl OnlineSource for Trainer {
    fn advance_to(&mut self, step: u64) -> Result<()> {
        self.run_until(step, &mut |_| Ok(()))
    }

    fn model(&self) -> ReturnModel<'_> {
        self.online_model()
    }
}
