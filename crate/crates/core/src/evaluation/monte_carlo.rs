use serde::{Deserialize, Serialize};

use crate::distributions::EmpiricalDistribution;
use crate::envs::{Env, MdpSpec, Policy};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Per action `a`, `m` discounted returns of rollouts that start at `state`,
/// take `a` first and follow `policy` afterwards. Rollouts stop at absorbing
/// states or after `horizon` steps.
pub fn monte_carlo_estimate(
    env: &mut Env,
    policy: &Policy,
    state: usize,
    m: usize,
    horizon: usize,
    rng: &mut Rng,
) -> Result<Vec<EmpiricalDistribution>> {
    if m == 0 || horizon == 0 {
        return Err(Error::Domain("Monte Carlo estimation needs M >= 1 and a positive horizon".into()));
    }
    let spec: std::sync::Arc<MdpSpec> = env.shared_spec();
    policy.check_compatible(&spec)?;
    spec.check_state(state)?;
    let gamma = spec.gamma();
    let mut out = Vec::with_capacity(spec.num_actions());
    for first in 0..spec.num_actions() {
        let mut returns = Vec::with_capacity(m);
        for _ in 0..m {
            let mut s = env.reset_to(state)?;
            let mut a = first;
            let (mut ret, mut disc) = (0.0, 1.0);
            for _ in 0..horizon {
                if spec.is_absorbing(s) {
                    break;
                }
                let t = env.step(s, a, rng)?.transition;
                ret += disc * t.reward;
                disc *= gamma;
                s = t.next_state;
                a = policy.sample(s, rng);
            }
            returns.push(ret);
        }
        out.push(EmpiricalDistribution::new(returns)?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub action: usize,
    pub bin_left: f64,
    pub bin_right: f64,
    pub count: usize,
}

/// Equal-width histogram over the pooled range of all actions' samples.
pub fn histogram(per_action: &[EmpiricalDistribution], bins: usize) -> Result<Vec<HistogramBin>> {
    if bins == 0 || per_action.is_empty() {
        return Err(Error::Domain("histogram needs at least one bin and one action".into()));
    }
    let lo = per_action.iter().map(|d| d.min()).fold(f64::INFINITY, f64::min);
    let hi = per_action.iter().map(|d| d.max()).fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut out = Vec::with_capacity(bins * per_action.len());
    for (a, d) in per_action.iter().enumerate() {
        let mut counts = vec![0usize; bins];
        for &x in d.samples() {
            let k = (((x - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        for (k, count) in counts.into_iter().enumerate() {
            out.push(HistogramBin {
                action: a,
                bin_left: lo + k as f64 * width,
                bin_right: lo + (k + 1) as f64 * width,
                count,
            });
        }
    }
    Ok(out)
}
