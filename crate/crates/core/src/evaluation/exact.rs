use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::distributions::{wasserstein, EmpiricalDistribution};
use crate::envs::{MdpSpec, Policy};
use crate::error::{Error, Result};

/// Largest number of weighted paths the enumeration will expand.
pub const PATH_BUDGET: usize = 10_000_000;

/// Finite-support return distribution for every `(s, a)`, from exhaustive
/// enumeration to a horizon that bounds the truncated tail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactReturnDistribution {
    pub env: String,
    pub num_states: usize,
    pub num_actions: usize,
    pub gamma: f64,
    pub tolerance: f64,
    pub horizon: usize,
    /// `gamma^H R_max / (1 - gamma)`: no return moved by more than this.
    pub tail_bound: f64,
    /// `(return, probability)` pairs sorted by return, at `s * A + a`.
    pub atoms: Vec<Vec<(f64, f64)>>,
}

/// Smallest `H >= 1` with `gamma^H R_max / (1 - gamma) < tol`.
pub fn truncation_horizon(gamma: f64, r_max: f64, tol: f64) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tail tolerance must be positive, got {tol}")));
    }
    let bound = r_max / (1.0 - gamma);
    let mut h = 1;
    let mut tail = gamma * bound;
    while tail >= tol {
        h += 1;
        tail *= gamma;
        if h > 1_000_000 {
            return Err(Error::Config(format!("tolerance {tol} needs an unbounded horizon")));
        }
    }
    Ok(h)
}

impl ExactReturnDistribution {
    pub fn atoms(&self, s: usize, a: usize) -> &[(f64, f64)] {
        &self.atoms[s * self.num_actions + a]
    }

    pub fn mean(&self, s: usize, a: usize) -> f64 {
        self.atoms(s, a).iter().map(|(x, p)| x * p).sum()
    }

    pub fn total_probability(&self, s: usize, a: usize) -> f64 {
        self.atoms(s, a).iter().map(|a| a.1).sum()
    }

    /// Weighted empirical form, renormalized against accumulated rounding.
    pub fn distribution(&self, s: usize, a: usize) -> Result<EmpiricalDistribution> {
        normalized(self.atoms(s, a))
    }
}

fn normalized(atoms: &[(f64, f64)]) -> Result<EmpiricalDistribution> {
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    EmpiricalDistribution::weighted(
        atoms.iter().map(|a| a.0).collect(),
        atoms.iter().map(|a| a.1 / total).collect(),
    )
}

type Live = BTreeMap<(usize, usize, u64), f64>;

fn add_atom(map: &mut BTreeMap<u64, f64>, ret: f64, p: f64) {
    // -0.0 and 0.0 are the same return
    let key = if ret == 0.0 { 0.0f64 } else { ret };
    *map.entry(key.to_bits()).or_insert(0.0) += p;
}

/// Enumerate every trajectory from each `(s, a)` under `policy` up to the
/// truncation horizon, merging paths that share state, action and
/// bit-identical partial return.
pub fn exact_distribution(spec: &MdpSpec, policy: &Policy, tol: f64) -> Result<ExactReturnDistribution> {
    policy.check_compatible(spec)?;
    let (ns, na) = (spec.num_states(), spec.num_actions());
    let gamma = spec.gamma();
    let horizon = truncation_horizon(gamma, spec.r_max(), tol)?;
    let tail_bound = gamma.powi(horizon as i32) * spec.return_bound();
    let mut expanded = 0usize;
    let mut atoms = Vec::with_capacity(ns * na);
    for s0 in 0..ns {
        for a0 in 0..na {
            if spec.is_absorbing(s0) {
                atoms.push(vec![(0.0, 1.0)]);
                continue;
            }
            let mut done: BTreeMap<u64, f64> = BTreeMap::new();
            let mut live: Live = BTreeMap::new();
            live.insert((s0, a0, 0f64.to_bits()), 1.0);
            let mut disc = 1.0;
            for depth in 0..horizon {
                let mut next: Live = BTreeMap::new();
                for (&(s, a, bits), &p) in &live {
                    let ret = f64::from_bits(bits);
                    for o in spec.reward_outcomes(s, a) {
                        if o.prob == 0.0 {
                            continue;
                        }
                        let r_ret = ret + disc * o.value;
                        for (s2, &pt) in spec.transition_row(s, a).iter().enumerate() {
                            if pt == 0.0 {
                                continue;
                            }
                            let q = p * o.prob * pt;
                            expanded += 1;
                            if spec.is_absorbing(s2) {
                                add_atom(&mut done, r_ret, q);
                                continue;
                            }
                            for a2 in 0..na {
                                let pa = policy.prob(s2, a2);
                                if pa == 0.0 {
                                    continue;
                                }
                                let key = if r_ret == 0.0 { 0.0f64 } else { r_ret };
                                *next.entry((s2, a2, key.to_bits())).or_insert(0.0) += q * pa;
                            }
                        }
                    }
                    if expanded > PATH_BUDGET {
                        return Err(Error::Infeasible {
                            limit: PATH_BUDGET,
                            horizon: depth + 1,
                        });
                    }
                }
                live = next;
                disc *= gamma;
                if live.is_empty() {
                    break;
                }
            }
            // whatever is still running is truncated with zero future return
            for (&(_, _, bits), &p) in &live {
                add_atom(&mut done, f64::from_bits(bits), p);
            }
            let mut list: Vec<(f64, f64)> = done.into_iter().map(|(b, p)| (f64::from_bits(b), p)).collect();
            list.sort_by(|x, y| x.0.total_cmp(&y.0));
            atoms.push(list);
        }
    }
    Ok(ExactReturnDistribution {
        env: spec.name().to_string(),
        num_states: ns,
        num_actions: na,
        gamma,
        tolerance: tol,
        horizon,
        tail_bound,
        atoms,
    })
}

/// Distribution of `r + gamma Y(s', a')` for one step from `(s, a)`, assembled
/// from the oracle's own successor distributions.
pub fn bellman_reassemble(
    spec: &MdpSpec,
    policy: &Policy,
    exact: &ExactReturnDistribution,
    s: usize,
    a: usize,
) -> Result<Vec<(f64, f64)>> {
    spec.check_state(s)?;
    spec.check_action(a)?;
    if spec.is_absorbing(s) {
        return Ok(vec![(0.0, 1.0)]);
    }
    let gamma = spec.gamma();
    let mut out: BTreeMap<u64, f64> = BTreeMap::new();
    for o in spec.reward_outcomes(s, a) {
        for (s2, &pt) in spec.transition_row(s, a).iter().enumerate() {
            if pt == 0.0 || o.prob == 0.0 {
                continue;
            }
            if spec.is_absorbing(s2) {
                add_atom(&mut out, o.value, o.prob * pt);
                continue;
            }
            for a2 in 0..spec.num_actions() {
                let pa = policy.prob(s2, a2);
                if pa == 0.0 {
                    continue;
                }
                for &(y, py) in exact.atoms(s2, a2) {
                    add_atom(&mut out, o.value + gamma * y, o.prob * pt * pa * py);
                }
            }
        }
    }
    let mut list: Vec<(f64, f64)> = out.into_iter().map(|(b, p)| (f64::from_bits(b), p)).collect();
    list.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(list)
}

/// `W1` between the oracle at `(s, a)` and its one-step reassembly.
pub fn bellman_residual(spec: &MdpSpec, policy: &Policy, exact: &ExactReturnDistribution, s: usize, a: usize) -> Result<f64> {
    let re = normalized(&bellman_reassemble(spec, policy, exact, s, a)?)?;
    wasserstein(&exact.distribution(s, a)?, &re, 1)
}
