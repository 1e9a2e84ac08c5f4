//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export returns `Result<_, String>` so the same functions run in
//! native tests; in the browser an `Err` arrives as a thrown string.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use distrl_core::distributions::quantile_huber;
use distrl_core::envs::suite::{builtin, EnvParams};
use distrl_core::envs::{Env, PolicySpec};
use distrl_core::evaluation::{
    exact_distribution, histogram, monte_carlo_estimate, pseudo_samples, truncation_horizon, ExactReturnDistribution,
    ReturnModel,
};
use distrl_core::rng::stream;
use distrl_core::trainer::{Algorithm, GanConfig, QuantileNetConfig, TargetMode, TrainConfig, Trainer};

/// Oracle tail tolerance used by the demo.
const TOLERANCE: f64 = 1e-6;

fn msg(e: distrl_core::Error) -> String {
    e.to_string()
}

/// Quantile Huber loss at `points` evenly spaced TD errors in `[lo, hi]`.
#[wasm_bindgen]
pub fn loss_curve(tau: f64, delta: f64, lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, String> {
    if points < 2 || !(hi > lo) {
        return Err(format!("need at least 2 points over a non-empty range, got {points} on [{lo}, {hi}]"));
    }
    let step = (hi - lo) / (points - 1) as f64;
    (0..points)
        .map(|i| quantile_huber(lo + step * i as f64, tau, delta).map_err(msg))
        .collect()
}

#[derive(Debug, Serialize)]
pub struct Bin {
    pub left: f64,
    pub right: f64,
    pub count: usize,
}

/// Exact and Monte Carlo views of one `(state, action)` return distribution.
#[derive(Debug, Serialize)]
pub struct ReturnView {
    pub atoms: Vec<(f64, f64)>,
    pub exact_mean: f64,
    pub rollouts: usize,
    pub mc_mean: f64,
    pub mc_std_err: f64,
    pub bins: Vec<Bin>,
}

fn policy_spec(name: &str) -> Result<PolicySpec, String> {
    match name {
        "uniform" => Ok(PolicySpec::Uniform),
        "optimal" => Ok(PolicySpec::Optimal),
        other => Err(format!("policy `{other}` is not `uniform` or `optimal`")),
    }
}

pub fn return_view(
    env: &str,
    gamma: f64,
    slip: f64,
    policy: &str,
    state: usize,
    action: usize,
    rollouts: usize,
    seed: u32,
) -> Result<ReturnView, String> {
    let params = EnvParams {
        gamma,
        slip,
        ..Default::default()
    };
    let spec = builtin(env, &params).map_err(msg)?;
    spec.check_state(state).map_err(msg)?;
    spec.check_action(action).map_err(msg)?;
    let pol = policy_spec(policy)?.resolve(&spec).map_err(msg)?;
    let ex = exact_distribution(&spec, &pol, TOLERANCE).map_err(msg)?;
    let horizon = truncation_horizon(spec.gamma(), spec.r_max(), TOLERANCE).map_err(msg)?;
    let mut e = Env::new(spec);
    let per_action = monte_carlo_estimate(&mut e, &pol, state, rollouts, horizon, &mut stream(seed as u64, "mc", 0))
        .map_err(msg)?;
    let mc = &per_action[action];
    let bins = histogram(std::slice::from_ref(mc), 30)
        .map_err(msg)?
        .into_iter()
        .map(|b| Bin {
            left: b.bin_left,
            right: b.bin_right,
            count: b.count,
        })
        .collect();
    Ok(ReturnView {
        atoms: ex.atoms(state, action).to_vec(),
        exact_mean: ex.mean(state, action),
        rollouts,
        mc_mean: mc.mean(),
        mc_std_err: (mc.variance() / rollouts as f64).sqrt(),
        bins,
    })
}

/// [`return_view`] as JSON.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn return_distribution(
    env: &str,
    gamma: f64,
    slip: f64,
    policy: &str,
    state: usize,
    action: usize,
    rollouts: usize,
    seed: u32,
) -> Result<String, String> {
    let view = return_view(env, gamma, slip, policy, state, action, rollouts, seed)?;
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

/// A generator/critic pair learning the fair coin's return distribution
/// (reward -1 or +1, then termination) under a uniform policy.
#[wasm_bindgen]
pub struct CoinGan {
    trainer: Trainer,
    oracle: ExactReturnDistribution,
}

#[wasm_bindgen]
impl CoinGan {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, lr: f64) -> Result<CoinGan, String> {
        let spec = builtin("coin", &EnvParams::default()).map_err(msg)?;
        let policy = PolicySpec::Uniform.resolve(&spec).map_err(msg)?;
        let oracle = exact_distribution(&spec, &policy, TOLERANCE).map_err(msg)?;
        let cfg = TrainConfig {
            algorithm: Algorithm::Ign,
            target: TargetMode::Evaluate {
                policy: PolicySpec::Uniform,
            },
            total_steps: u64::MAX,
            learning_starts: 64,
            metrics_every: u64::MAX,
            quantile: QuantileNetConfig {
                embed_dim: 8,
                cosine_basis: 8,
                width: 16,
                lr: 1e-3,
                batch_size: 32,
                action_draws: 8,
            },
            ..Default::default()
        };
        let gan = GanConfig {
            lr,
            critic_lr: Some(3.0 * lr),
            beta1: 0.0,
            width: 32,
            ..Default::default()
        };
        let trainer = Trainer::new(spec, cfg, gan, seed as u64).map_err(msg)?;
        Ok(CoinGan { trainer, oracle })
    }

    /// Run `steps` more environment steps and return the `W1` distance
    /// between the generator's pseudo-samples and the exact distribution.
    pub fn train(&mut self, steps: u32) -> Result<f64, String> {
        let target = self.trainer.steps() + steps as u64;
        self.trainer.run_until(target, &mut |_| Ok(())).map_err(msg)?;
        self.distance()
    }

    pub fn distance(&self) -> Result<f64, String> {
        self.trainer
            .distance_to(&self.oracle, self.trainer.online_model(), 1024)
            .map_err(msg)
    }

    pub fn steps(&self) -> f64 {
        self.trainer.steps() as f64
    }

    /// `m` pseudo-samples of the return of action `action` from the start state.
    pub fn samples(&self, action: usize, m: usize, seed: u32) -> Result<Vec<f64>, String> {
        let ReturnModel::Generator(g) = self.trainer.online_model() else {
            return Err("the coin trainer has no generator".into());
        };
        let d = pseudo_samples(g, self.trainer.spec(), 0, action, m, &mut stream(seed as u64, "demo", 0)).map_err(msg)?;
        Ok(d.samples().to_vec())
    }
}
