//! Built-in environments with exactly enumerable return distributions.

use serde::{Deserialize, Serialize};

use crate::envs::mdp::{MdpSpec, RewardOutcome};
use crate::error::{Error, Result};

pub const CHAIN_LEN: usize = 5;
pub const CHAIN_TERMINAL: usize = CHAIN_LEN;
pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;

/// Knobs shared by the built-in environments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvParams {
    pub gamma: f64,
    /// Multiplies every reward (and `R_max`).
    pub reward_scale: f64,
    /// Probability that a chain move goes the opposite way.
    pub slip: f64,
}

impl Default for EnvParams {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            reward_scale: 1.0,
            slip: 0.2,
        }
    }
}

pub const BUILTIN_NAMES: &[&str] = &["chain", "cliff", "coin", "self-loop"];

pub fn builtin(name: &str, params: &EnvParams) -> Result<MdpSpec> {
    match name {
        "chain" => chain(params),
        "cliff" => cliff(params),
        "coin" => coin(params),
        "self-loop" => self_loop(params),
        other => Err(Error::Config(format!(
            "unknown environment `{other}` (expected one of {BUILTIN_NAMES:?})"
        ))),
    }
}

/// Five-state stochastic chain plus an absorbing terminal state (index 5).
///
/// In states 0-3 each move costs 0.05 and slips the other way with
/// probability `slip`. State 4 is the goal: RIGHT pays a Bernoulli reward
/// (1 or 0, equally likely), LEFT pays a certain 0.4; both then terminate.
/// Episodes start uniformly over the five chain states.
pub fn chain(params: &EnvParams) -> Result<MdpSpec> {
    let n = CHAIN_LEN + 1;
    let k = params.reward_scale;
    let mut transitions = vec![0.0; n * 2 * n];
    let mut rewards = Vec::with_capacity(n * 2);
    for s in 0..n {
        for a in [LEFT, RIGHT] {
            let row = &mut transitions[(s * 2 + a) * n..(s * 2 + a + 1) * n];
            if s == CHAIN_TERMINAL || s == CHAIN_LEN - 1 {
                row[CHAIN_TERMINAL] = 1.0;
            } else {
                let up = (s + 1).min(CHAIN_LEN - 1);
                let down = s.saturating_sub(1);
                let (intended, other) = if a == RIGHT { (up, down) } else { (down, up) };
                row[intended] += 1.0 - params.slip;
                row[other] += params.slip;
            }
            rewards.push(match (s, a) {
                (CHAIN_TERMINAL, _) => RewardOutcome::certain(0.0),
                (s, RIGHT) if s == CHAIN_LEN - 1 => {
                    vec![RewardOutcome::new(0.0, 0.5), RewardOutcome::new(k, 0.5)]
                }
                (s, LEFT) if s == CHAIN_LEN - 1 => RewardOutcome::certain(0.4 * k),
                _ => RewardOutcome::certain(-0.05 * k),
            });
        }
    }
    let mut initial = vec![1.0 / CHAIN_LEN as f64; n];
    initial[CHAIN_TERMINAL] = 0.0;
    let mut absorbing = vec![false; n];
    absorbing[CHAIN_TERMINAL] = true;
    MdpSpec::new("chain", n, 2, transitions, rewards, initial, params.gamma, k.abs(), absorbing)
}

pub const CLIFF_ROWS: usize = 4;
pub const CLIFF_COLS: usize = 6;

/// 4x6 cliff walk. Start bottom-left, goal bottom-right, the cells between
/// them are cliff. Moves are deterministic (up, right, down, left) and cost 1;
/// stepping into the cliff costs 10. Cliff and goal cells are absorbing.
/// Extra state features are the normalized `(row, col)` coordinates.
pub fn cliff(params: &EnvParams) -> Result<MdpSpec> {
    let n = CLIFF_ROWS * CLIFF_COLS;
    let k = params.reward_scale;
    let idx = |r: usize, c: usize| r * CLIFF_COLS + c;
    let is_cliff = |r: usize, c: usize| r == CLIFF_ROWS - 1 && c > 0 && c < CLIFF_COLS - 1;
    let goal = idx(CLIFF_ROWS - 1, CLIFF_COLS - 1);
    let mut absorbing = vec![false; n];
    for r in 0..CLIFF_ROWS {
        for c in 0..CLIFF_COLS {
            absorbing[idx(r, c)] = is_cliff(r, c) || idx(r, c) == goal;
        }
    }
    let mut transitions = vec![0.0; n * 4 * n];
    let mut rewards = Vec::with_capacity(n * 4);
    for r in 0..CLIFF_ROWS {
        for c in 0..CLIFF_COLS {
            let s = idx(r, c);
            for a in 0..4 {
                let (nr, nc) = if absorbing[s] {
                    (r, c)
                } else {
                    match a {
                        0 => (r.saturating_sub(1), c),
                        1 => (r, (c + 1).min(CLIFF_COLS - 1)),
                        2 => ((r + 1).min(CLIFF_ROWS - 1), c),
                        _ => (r, c.saturating_sub(1)),
                    }
                };
                transitions[(s * 4 + a) * n + idx(nr, nc)] = 1.0;
                let reward = if absorbing[s] {
                    0.0
                } else if is_cliff(nr, nc) {
                    -10.0 * k
                } else {
                    -k
                };
                rewards.push(RewardOutcome::certain(reward));
            }
        }
    }
    let mut initial = vec![0.0; n];
    initial[idx(CLIFF_ROWS - 1, 0)] = 1.0;
    let features = (0..n)
        .map(|s| {
            vec![
                (s / CLIFF_COLS) as f64 / (CLIFF_ROWS - 1) as f64,
                (s % CLIFF_COLS) as f64 / (CLIFF_COLS - 1) as f64,
            ]
        })
        .collect();
    MdpSpec::new("cliff", n, 4, transitions, rewards, initial, params.gamma, 10.0 * k.abs(), absorbing)?
        .with_extra_features(features)
}

/// Two-state coin: either action in state 0 pays +-1 (scaled) with equal
/// probability and moves to the absorbing state 1.
pub fn coin(params: &EnvParams) -> Result<MdpSpec> {
    let k = params.reward_scale;
    let flip = vec![RewardOutcome::new(-k, 0.5), RewardOutcome::new(k, 0.5)];
    MdpSpec::new(
        "coin",
        2,
        2,
        vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0],
        vec![flip.clone(), flip, RewardOutcome::certain(0.0), RewardOutcome::certain(0.0)],
        vec![1.0, 0.0],
        params.gamma,
        k.abs(),
        vec![false, true],
    )
}

/// One state, one action, reward 1 forever.
pub fn self_loop(params: &EnvParams) -> Result<MdpSpec> {
    MdpSpec::new(
        "self-loop",
        1,
        1,
        vec![1.0],
        vec![RewardOutcome::certain(params.reward_scale)],
        vec![1.0],
        params.gamma,
        params.reward_scale.abs(),
        vec![false],
    )
}
