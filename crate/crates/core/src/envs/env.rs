use std::sync::Arc;

use rand::Rng as _;

use crate::envs::mdp::{MdpSpec, Policy, Transition};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Result of one environment step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvStep {
    /// Transition with the action that was actually executed.
    pub transition: Transition,
    pub submitted_action: usize,
    /// The previous action overrode the submitted one.
    pub repeated: bool,
}

/// An MDP with optional sticky actions: with probability `repeat_prob` the
/// previously executed action runs instead of the submitted one. The first
/// step after a reset always runs the submitted action.
#[derive(Clone, Debug)]
pub struct Env {
    spec: Arc<MdpSpec>,
    repeat_prob: f64,
    prev_action: Option<usize>,
}

impl Env {
    pub fn new(spec: impl Into<Arc<MdpSpec>>) -> Self {
        Self {
            spec: spec.into(),
            repeat_prob: 0.0,
            prev_action: None,
        }
    }

    /// Sticky-action wrapper. `repeat_prob` must lie in `[0, 1)`.
    pub fn sticky(spec: impl Into<Arc<MdpSpec>>, repeat_prob: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&repeat_prob) {
            return Err(Error::Config(format!(
                "sticky repeat probability {repeat_prob} outside [0, 1)"
            )));
        }
        Ok(Self {
            repeat_prob,
            ..Self::new(spec)
        })
    }

    pub fn spec(&self) -> &MdpSpec {
        &self.spec
    }

    pub fn shared_spec(&self) -> Arc<MdpSpec> {
        Arc::clone(&self.spec)
    }

    pub fn repeat_prob(&self) -> f64 {
        self.repeat_prob
    }

    /// Start a new episode from the initial distribution.
    pub fn reset(&mut self, rng: &mut Rng) -> usize {
        self.prev_action = None;
        self.spec.sample_initial(rng)
    }

    /// Start a new episode from a chosen state.
    pub fn reset_to(&mut self, state: usize) -> Result<usize> {
        self.spec.check_state(state)?;
        self.prev_action = None;
        Ok(state)
    }

    pub fn step(&mut self, state: usize, action: usize, rng: &mut Rng) -> Result<EnvStep> {
        self.spec.check_action(action)?;
        let mut executed = action;
        let mut repeated = false;
        // no draw at p = 0 keeps the unwrapped RNG stream intact
        if self.repeat_prob > 0.0 {
            if let Some(prev) = self.prev_action {
                if rng.gen::<f64>() < self.repeat_prob {
                    executed = prev;
                    repeated = true;
                }
            }
        }
        let transition = self.spec.step(state, executed, rng)?;
        self.prev_action = Some(executed);
        Ok(EnvStep {
            transition,
            submitted_action: action,
            repeated,
        })
    }
}

/// `sum_t gamma^t r_t`, accumulated front to back with a running discount.
pub fn discounted_return(rewards: impl IntoIterator<Item = f64>, gamma: f64) -> f64 {
    let mut ret = 0.0;
    let mut disc = 1.0;
    for r in rewards {
        ret += disc * r;
        disc *= gamma;
    }
    ret
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub transitions: Vec<Transition>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn discounted_return(&self, gamma: f64) -> f64 {
        discounted_return(self.transitions.iter().map(|t| t.reward), gamma)
    }
}

/// Exactly `horizon` transitions under `policy`, starting from the initial
/// distribution. After an absorbing state the trajectory is padded with
/// zero-reward terminal self-transitions.
pub fn rollout(env: &mut Env, policy: &Policy, horizon: usize, rng: &mut Rng) -> Result<Trajectory> {
    let s0 = env.reset(rng);
    rollout_from(env, policy, s0, None, horizon, rng)
}

/// Like [`rollout`] from a fixed start state, optionally forcing the first action.
pub fn rollout_from(
    env: &mut Env,
    policy: &Policy,
    start: usize,
    first_action: Option<usize>,
    horizon: usize,
    rng: &mut Rng,
) -> Result<Trajectory> {
    if horizon == 0 {
        return Err(Error::Config("rollout horizon must be at least 1".into()));
    }
    policy.check_compatible(env.spec())?;
    let mut s = env.reset_to(start)?;
    let mut transitions = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let a = match (t, first_action) {
            (0, Some(a)) => a,
            _ => policy.sample(s, rng),
        };
        let step = env.step(s, a, rng)?;
        transitions.push(step.transition);
        s = step.transition.next_state;
    }
    Ok(Trajectory { transitions })
}
