use serde::{Deserialize, Serialize};

use crate::autodiff::AdamConfig;
use crate::distributions::LossConfig;
use crate::envs::PolicySpec;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Quantile network plus the generator/critic pair.
    #[default]
    Ign,
    /// Quantile network only.
    Iqn,
    /// Quantile network with `N = N' = 1` and the level pinned at 0.5.
    Dqn,
}

impl Algorithm {
    pub fn uses_gan(self) -> bool {
        self == Algorithm::Ign
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ign => "ign",
            Algorithm::Iqn => "iqn",
            Algorithm::Dqn => "dqn",
        }
    }
}

/// What the bootstrap action `a'` at `s'` is.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetMode {
    /// Greedy under the online network's mean action values; acting is epsilon-greedy.
    #[default]
    Control,
    /// `a' ~ policy(s')`; acting follows an epsilon-mixture of the policy.
    Evaluate { policy: PolicySpec },
}

/// Input of the critic's gradient norm in the penalty term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyInput {
    /// Only the return coordinate `x~`.
    Return,
    /// The full row `[x~ | encoding(s,a)]`. Along a one-dimensional return
    /// axis the slope can then change sign without the norm passing through 0.
    #[default]
    Joint,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GanConfig {
    /// Gradient-penalty coefficient.
    pub lambda: f64,
    /// Critic updates per generator update.
    pub n_critic: usize,
    pub batch_size: usize,
    /// Generator learning rate.
    pub lr: f64,
    /// Which critic input the gradient penalty differentiates against.
    pub penalty_input: PenaltyInput,
    /// Critic learning rate; the generator's when absent.
    pub critic_lr: Option<f64>,
    /// When set, both learning rates fall linearly to this fraction of their
    /// initial value at `train.total_steps`.
    pub anneal_to: Option<f64>,
    pub beta1: f64,
    pub beta2: f64,
    pub width: usize,
}

impl Default for GanConfig {
    fn default() -> Self {
        Self {
            lambda: 10.0,
            n_critic: 5,
            batch_size: 32,
            lr: 1e-4,
            critic_lr: None,
            anneal_to: None,
            penalty_input: PenaltyInput::Joint,
            beta1: 0.5,
            beta2: 0.9,
            width: 64,
        }
    }
}

impl GanConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.lambda >= 0.0) {
            v.push(format!("gan.lambda must be >= 0, got {}", self.lambda));
        }
        if self.n_critic == 0 {
            v.push("gan.n_critic must be >= 1".into());
        }
        if self.batch_size == 0 {
            v.push("gan.batch_size must be >= 1".into());
        }
        if !(self.lr > 0.0) {
            v.push(format!("gan.lr must be positive, got {}", self.lr));
        }
        if let Some(c) = self.critic_lr {
            if !(c > 0.0) {
                v.push(format!("gan.critic_lr must be positive, got {c}"));
            }
        }
        if let Some(f) = self.anneal_to {
            if !(f > 0.0 && f <= 1.0) {
                v.push(format!("gan.anneal_to must be in (0, 1], got {f}"));
            }
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            v.push(format!("gan.beta1 and gan.beta2 must lie in [0, 1), got {} and {}", self.beta1, self.beta2));
        }
        if self.width == 0 {
            v.push("gan.width must be >= 1".into());
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        into_result(self.violations())
    }

    pub fn generator_adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            ..AdamConfig::default()
        }
    }

    pub fn critic_adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.critic_lr.unwrap_or(self.lr),
            ..self.generator_adam()
        }
    }
}

/// Linear decay from `start` to `end` over `decay_steps` environment steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: u64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            start: 1.0,
            end: 0.05,
            decay_steps: 10_000,
        }
    }
}

impl EpsilonSchedule {
    pub fn at(&self, step: u64) -> f64 {
        if self.decay_steps == 0 || step >= self.decay_steps {
            return self.end;
        }
        let frac = step as f64 / self.decay_steps as f64;
        self.start + (self.end - self.start) * frac
    }
}

/// Layer names (`layer0`, `psi1`, ...) excluded from updates, per network.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FreezeConfig {
    #[serde(default)]
    pub generator: Vec<String>,
    #[serde(default)]
    pub critic: Vec<String>,
    #[serde(default)]
    pub quantile: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantileNetConfig {
    pub embed_dim: usize,
    pub cosine_basis: usize,
    pub width: usize,
    pub lr: f64,
    pub batch_size: usize,
    /// Level draws used to rank actions.
    pub action_draws: usize,
}

impl Default for QuantileNetConfig {
    fn default() -> Self {
        Self {
            embed_dim: 64,
            cosine_basis: 64,
            width: 128,
            lr: 1e-4,
            batch_size: 32,
            action_draws: 32,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    pub target: TargetMode,
    pub total_steps: u64,
    /// Environment steps before the first update.
    pub learning_starts: u64,
    /// Environment steps between update rounds.
    pub update_period: u64,
    /// Update rounds between target-network copies.
    pub target_sync: u64,
    pub max_episode_len: u64,
    pub epsilon: EpsilonSchedule,
    pub loss: LossConfig,
    pub quantile: QuantileNetConfig,
    pub replay_capacity: usize,
    /// Global-norm gradient clip; `None` disables it.
    pub grad_clip: Option<f64>,
    pub sticky_prob: f64,
    pub freeze: FreezeConfig,
    /// Environment steps between metric records.
    pub metrics_every: u64,
    /// Samples per probe when measuring distance to an oracle.
    pub oracle_samples: usize,
    /// Include elapsed wall-clock seconds in metric records.
    pub record_wallclock: bool,
    /// Experimental: the critic's bootstrap sample comes from the target
    /// quantile network instead of the generator.
    pub critic_quantile_targets: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Ign,
            target: TargetMode::Control,
            total_steps: 50_000,
            learning_starts: 1_000,
            update_period: 1,
            target_sync: 1_000,
            max_episode_len: 200,
            epsilon: EpsilonSchedule::default(),
            loss: LossConfig::default(),
            quantile: QuantileNetConfig::default(),
            replay_capacity: 50_000,
            grad_clip: Some(10.0),
            sticky_prob: 0.0,
            freeze: FreezeConfig::default(),
            metrics_every: 1_000,
            oracle_samples: 512,
            record_wallclock: false,
            critic_quantile_targets: false,
        }
    }
}

impl TrainConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (name, value) in [
            ("update_period", self.update_period),
            ("target_sync", self.target_sync),
            ("max_episode_len", self.max_episode_len),
            ("metrics_every", self.metrics_every),
        ] {
            if value == 0 {
                v.push(format!("{name} must be >= 1"));
            }
        }
        let e = &self.epsilon;
        if !(0.0..=1.0).contains(&e.start) || !(0.0..=1.0).contains(&e.end) {
            v.push(format!("epsilon schedule must lie in [0, 1], got {} -> {}", e.start, e.end));
        }
        if let Err(err) = self.loss.validate() {
            v.push(err.to_string());
        }
        let q = &self.quantile;
        if [q.embed_dim, q.cosine_basis, q.width, q.batch_size, q.action_draws].contains(&0) {
            v.push("quantile network sizes, batch_size and action_draws must be >= 1".into());
        }
        if !(q.lr > 0.0) {
            v.push(format!("quantile.lr must be positive, got {}", q.lr));
        }
        if self.replay_capacity == 0 {
            v.push("replay_capacity must be >= 1".into());
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0) {
                v.push(format!("grad_clip must be positive, got {c}"));
            }
        }
        if !(0.0..1.0).contains(&self.sticky_prob) {
            v.push(format!("sticky_prob must lie in [0, 1), got {}", self.sticky_prob));
        }
        if self.oracle_samples == 0 {
            v.push("oracle_samples must be >= 1".into());
        }
        if self.critic_quantile_targets && !self.algorithm.uses_gan() {
            v.push("critic_quantile_targets needs the ign algorithm".into());
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        into_result(self.violations())
    }

    /// Level counts actually used, after the `dqn` override.
    pub fn level_counts(&self) -> (usize, usize) {
        match self.algorithm {
            Algorithm::Dqn => (1, 1),
            _ => (self.loss.n, self.loss.n_prime),
        }
    }
}

fn into_result(v: Vec<String>) -> Result<()> {
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(v.join("; ")))
    }
}
