use rand::Rng as _;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::Rng;

const PROB_TOL: f64 = 1e-12;

/// One atom of a finite reward distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardOutcome {
    pub value: f64,
    pub prob: f64,
}

impl RewardOutcome {
    pub fn new(value: f64, prob: f64) -> Self {
        Self { value, prob }
    }

    pub fn certain(value: f64) -> Vec<Self> {
        vec![Self::new(value, 1.0)]
    }
}

/// A finite MDP with stochastic transitions and finite-support rewards per `(s, a)`.
///
/// Absorbing states emit zero reward and stay put, whatever their table rows say.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MdpSpec {
    name: String,
    num_states: usize,
    num_actions: usize,
    /// `P(s' | s, a)` at `(s * A + a) * S + s'`.
    transitions: Vec<f64>,
    /// Reward distribution at `s * A + a`.
    rewards: Vec<Vec<RewardOutcome>>,
    initial: Vec<f64>,
    gamma: f64,
    r_max: f64,
    absorbing: Vec<bool>,
    /// Extra per-state features appended to the one-hot encoding.
    #[serde(default)]
    extra_features: Vec<Vec<f64>>,
}

fn check_distribution(what: &str, probs: impl Iterator<Item = f64>) -> Result<()> {
    let mut total = 0.0;
    for p in probs {
        if !(0.0..=1.0 + PROB_TOL).contains(&p) {
            return Err(Error::Config(format!("{what}: probability {p} outside [0, 1]")));
        }
        total += p;
    }
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::Config(format!("{what}: probabilities sum to {total}, not 1")));
    }
    Ok(())
}

impl MdpSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        num_states: usize,
        num_actions: usize,
        transitions: Vec<f64>,
        rewards: Vec<Vec<RewardOutcome>>,
        initial: Vec<f64>,
        gamma: f64,
        r_max: f64,
        absorbing: Vec<bool>,
    ) -> Result<Self> {
        let spec = Self {
            name: name.into(),
            num_states,
            num_actions,
            transitions,
            rewards,
            initial,
            gamma,
            r_max,
            absorbing,
            extra_features: Vec::new(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_extra_features(mut self, features: Vec<Vec<f64>>) -> Result<Self> {
        let width = features.first().map_or(0, Vec::len);
        if features.len() != self.num_states || features.iter().any(|f| f.len() != width) {
            return Err(Error::Config(format!(
                "extra features need {} rows of equal width",
                self.num_states
            )));
        }
        self.extra_features = features;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let (s_n, a_n) = (self.num_states, self.num_actions);
        if s_n == 0 || a_n == 0 {
            return Err(Error::Config("MDP needs at least one state and one action".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!("discount {} must lie strictly inside (0, 1)", self.gamma)));
        }
        if self.transitions.len() != s_n * a_n * s_n {
            return Err(Error::Config(format!(
                "transition table has {} entries, expected {}",
                self.transitions.len(),
                s_n * a_n * s_n
            )));
        }
        if self.rewards.len() != s_n * a_n || self.absorbing.len() != s_n || self.initial.len() != s_n {
            return Err(Error::Config("reward, absorbing or initial table has the wrong length".into()));
        }
        for s in 0..s_n {
            for a in 0..a_n {
                let row = &self.transitions[(s * a_n + a) * s_n..(s * a_n + a + 1) * s_n];
                check_distribution(&format!("P(.|{s},{a})"), row.iter().copied())?;
                let rw = &self.rewards[s * a_n + a];
                check_distribution(&format!("R({s},{a})"), rw.iter().map(|o| o.prob))?;
                if let Some(o) = rw.iter().find(|o| o.value.abs() > self.r_max) {
                    return Err(Error::Config(format!(
                        "reward {} at ({s},{a}) exceeds R_max {}",
                        o.value, self.r_max
                    )));
                }
            }
        }
        check_distribution("initial distribution", self.initial.iter().copied())?;
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// `R_max / (1 - gamma)`, the bound on any discounted return.
    pub fn return_bound(&self) -> f64 {
        self.r_max / (1.0 - self.gamma)
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn is_absorbing(&self, s: usize) -> bool {
        self.absorbing[s]
    }

    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let n = self.num_states;
        let k = s * self.num_actions + a;
        &self.transitions[k * n..(k + 1) * n]
    }

    pub fn reward_outcomes(&self, s: usize, a: usize) -> &[RewardOutcome] {
        &self.rewards[s * self.num_actions + a]
    }

    /// Expected immediate reward; zero at absorbing states.
    pub fn mean_reward(&self, s: usize, a: usize) -> f64 {
        if self.absorbing[s] {
            return 0.0;
        }
        self.reward_outcomes(s, a).iter().map(|o| o.value * o.prob).sum()
    }

    pub fn state_dim(&self) -> usize {
        self.num_states + self.extra_features.first().map_or(0, Vec::len)
    }

    /// One-hot state vector, followed by any extra features.
    pub fn encode_state(&self, s: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.state_dim()];
        v[s] = 1.0;
        if let Some(f) = self.extra_features.get(s) {
            v[self.num_states..].copy_from_slice(f);
        }
        v
    }

    pub fn check_state(&self, s: usize) -> Result<()> {
        if s >= self.num_states {
            return Err(Error::Index {
                what: "state",
                value: s,
                bound: self.num_states,
            });
        }
        Ok(())
    }

    pub fn check_action(&self, a: usize) -> Result<()> {
        if a >= self.num_actions {
            return Err(Error::Index {
                what: "action",
                value: a,
                bound: self.num_actions,
            });
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn content_hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("MdpSpec serializes");
        hex::encode(Sha256::digest(json))
    }

    pub fn sample_initial(&self, rng: &mut Rng) -> usize {
        sample_categorical(&self.initial, rng)
    }

    /// Sample one transition from `(s, a)`.
    pub fn step(&self, s: usize, a: usize, rng: &mut Rng) -> Result<Transition> {
        self.check_state(s)?;
        self.check_action(a)?;
        if self.absorbing[s] {
            return Ok(Transition {
                state: s,
                action: a,
                reward: 0.0,
                next_state: s,
                terminal: true,
            });
        }
        let next_state = sample_categorical(self.transition_row(s, a), rng);
        let outcomes = self.reward_outcomes(s, a);
        let reward = if outcomes.len() == 1 {
            outcomes[0].value
        } else {
            let probs: Vec<f64> = outcomes.iter().map(|o| o.prob).collect();
            outcomes[sample_categorical(&probs, rng)].value
        };
        Ok(Transition {
            state: s,
            action: a,
            reward,
            next_state,
            terminal: self.absorbing[next_state],
        })
    }
}

/// Index drawn from a probability vector (one uniform draw; none when the support is a single point).
pub fn sample_categorical(probs: &[f64], rng: &mut Rng) -> usize {
    if probs.len() == 1 {
        return 0;
    }
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
    pub terminal: bool,
}

/// Stationary policy: a probability vector over actions per state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    probs: Vec<Vec<f64>>,
}

impl Policy {
    pub fn new(probs: Vec<Vec<f64>>) -> Result<Self> {
        let width = probs.first().map_or(0, Vec::len);
        for (s, row) in probs.iter().enumerate() {
            if row.len() != width {
                return Err(Error::Config(format!("policy row {s} has {} actions, expected {width}", row.len())));
            }
            check_distribution(&format!("pi(.|{s})"), row.iter().copied())?;
        }
        Ok(Self { probs })
    }

    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        Self {
            probs: vec![vec![1.0 / num_actions as f64; num_actions]; num_states],
        }
    }

    pub fn deterministic(actions: &[usize], num_actions: usize) -> Result<Self> {
        let mut probs = Vec::with_capacity(actions.len());
        for &a in actions {
            if a >= num_actions {
                return Err(Error::Index {
                    what: "action",
                    value: a,
                    bound: num_actions,
                });
            }
            let mut row = vec![0.0; num_actions];
            row[a] = 1.0;
            probs.push(row);
        }
        Ok(Self { probs })
    }

    /// Take `action` with probability `p`, spread the rest uniformly.
    pub fn biased(num_states: usize, num_actions: usize, action: usize, p: f64) -> Result<Self> {
        if action >= num_actions || !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(format!("biased policy: action {action}, p {p}")));
        }
        let rest = if num_actions > 1 {
            (1.0 - p) / (num_actions - 1) as f64
        } else {
            0.0
        };
        let row: Vec<f64> = (0..num_actions).map(|a| if a == action { p } else { rest }).collect();
        Policy::new(vec![row; num_states])
    }

    pub fn num_states(&self) -> usize {
        self.probs.len()
    }

    pub fn num_actions(&self) -> usize {
        self.probs.first().map_or(0, Vec::len)
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s][a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s]
    }

    pub fn sample(&self, s: usize, rng: &mut Rng) -> usize {
        sample_categorical(&self.probs[s], rng)
    }

    /// Mix with the uniform policy: `(1 - eps) * pi + eps * uniform`.
    pub fn epsilon_mixed(&self, eps: f64) -> Self {
        let n = self.num_actions() as f64;
        Self {
            probs: self
                .probs
                .iter()
                .map(|row| row.iter().map(|p| (1.0 - eps) * p + eps / n).collect())
                .collect(),
        }
    }

    pub fn check_compatible(&self, spec: &MdpSpec) -> Result<()> {
        if self.num_states() != spec.num_states() || self.num_actions() != spec.num_actions() {
            return Err(Error::Config(format!(
                "policy is {}x{}, MDP is {}x{}",
                self.num_states(),
                self.num_actions(),
                spec.num_states(),
                spec.num_actions()
            )));
        }
        Ok(())
    }
}
