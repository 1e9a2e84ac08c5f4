use std::f64::consts::PI;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Array, Graph, ParamStore, Var};
use crate::distributions::{distort_tau, Distortion};
use crate::error::{Error, Result};
use crate::networks::layers::{dense, init_linear, stack_rows};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantileArch {
    pub state_dim: usize,
    pub num_actions: usize,
    /// Width `d` shared by the state and quantile-level embeddings.
    pub embed_dim: usize,
    /// Number of cosine features `cos(pi i tau)`, `i = 0..n`.
    pub cosine_basis: usize,
    /// Hidden width of the state MLP and of the head.
    pub width: usize,
}

impl QuantileArch {
    pub fn new(state_dim: usize, num_actions: usize) -> Self {
        Self {
            state_dim,
            num_actions,
            embed_dim: 64,
            cosine_basis: 64,
            width: 128,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if [self.state_dim, self.num_actions, self.embed_dim, self.cosine_basis, self.width].contains(&0) {
            return Err(Error::Config(format!("quantile network dimensions must be positive: {self:?}")));
        }
        Ok(())
    }
}

// parameter layout
const PSI: usize = 0;
const PHI: usize = 4;
const HEAD: usize = 6;

/// Implicit quantile network: `f(psi(s) * phi(tau))`, one output per action.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantileNetwork {
    pub arch: QuantileArch,
    pub params: ParamStore,
}

fn check_tau(tau: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Domain(format!("quantile level {tau} outside [0, 1]")));
    }
    Ok(())
}

/// Cosine features of a `k x 1` column of levels: `k x n`, entry `(r, i) = cos(pi i tau_r)`.
pub fn cosine_features(g: &mut Graph, taus: Var, n: usize) -> Result<Var> {
    let k = g.value(taus).rows();
    let freq: Vec<f64> = (0..k).flat_map(|_| (0..n).map(|i| PI * i as f64)).collect();
    let freq = g.constant(Array::matrix(k, n, freq)?);
    let spread = g.broadcast_cols(taus, n)?;
    let arg = g.mul(spread, freq)?;
    Ok(g.cos(arg))
}

/// `phi(tau)_j = relu(sum_i cos(pi i tau) w_ij + b_j)` for a single level.
pub fn cosine_embed(tau: f64, weight: &Array, bias: &Array) -> Result<Array> {
    check_tau(tau)?;
    let mut g = Graph::new();
    let t = g.constant(Array::scalar(tau));
    let n = weight.rows();
    let feats = cosine_features(&mut g, t, n)?;
    let w = g.constant(weight.clone());
    let b = g.constant(bias.clone());
    let pre = dense(&mut g, feats, w, b)?;
    let out = g.relu(pre);
    Ok(g.value(out).clone())
}

impl QuantileNetwork {
    pub fn new(arch: QuantileArch, rng: &mut Rng) -> Result<Self> {
        arch.validate()?;
        let mut params = ParamStore::new();
        init_linear(&mut params, "psi0", arch.state_dim, arch.width, false, rng);
        init_linear(&mut params, "psi1", arch.width, arch.embed_dim, false, rng);
        init_linear(&mut params, "phi", arch.cosine_basis, arch.embed_dim, false, rng);
        init_linear(&mut params, "head0", arch.embed_dim, arch.width, false, rng);
        init_linear(&mut params, "head1", arch.width, arch.num_actions, true, rng);
        Ok(Self { arch, params })
    }

    /// Graph forward pass. `states` is `B x state_dim`, `taus` is `(B*N) x 1`
    /// with the `N` levels of state `b` in rows `b*N..(b+1)*N`.
    /// Returns `(B*N) x num_actions`.
    pub fn forward(&self, g: &mut Graph, vars: &[Var], states: Var, taus: Var) -> Result<Var> {
        let b = g.value(states).rows();
        let bn = g.value(taus).rows();
        if b == 0 || bn % b != 0 || g.value(taus).cols() != 1 {
            return Err(Error::Shape {
                op: "quantile forward",
                left: g.value(states).shape().to_vec(),
                right: g.value(taus).shape().to_vec(),
            });
        }
        let h = dense(g, states, vars[PSI], vars[PSI + 1])?;
        let h = g.relu(h);
        let psi = dense(g, h, vars[PSI + 2], vars[PSI + 3])?;
        let psi = g.relu(psi);
        let psi = g.repeat_rows(psi, bn / b)?;

        let feats = cosine_features(g, taus, self.arch.cosine_basis)?;
        let phi = dense(g, feats, vars[PHI], vars[PHI + 1])?;
        let phi = g.relu(phi);

        let joint = g.mul(psi, phi)?;
        let h = dense(g, joint, vars[HEAD], vars[HEAD + 1])?;
        let h = g.relu(h);
        dense(g, h, vars[HEAD + 2], vars[HEAD + 3])
    }

    /// Quantile values for one encoded state: row `k` holds `theta_a(tau_k)` for every action.
    pub fn quantile_values(&self, state: &[f64], taus: &[f64]) -> Result<Array> {
        self.quantile_values_batch(&[state.to_vec()], taus)
    }

    /// Same `taus` for every state; output rows grouped by state.
    pub fn quantile_values_batch(&self, states: &[Vec<f64>], taus: &[f64]) -> Result<Array> {
        for &t in taus {
            check_tau(t)?;
        }
        if taus.is_empty() || states.is_empty() {
            return Err(Error::Domain("need at least one state and one quantile level".into()));
        }
        let mut g = Graph::new();
        let vars = self.params.bind(&mut g, false);
        let s = g.constant(stack_rows(states)?);
        let all: Vec<f64> = states.iter().flat_map(|_| taus.iter().copied()).collect();
        let t = g.constant(Array::column(all));
        let out = self.forward(&mut g, &vars, s, t)?;
        Ok(g.value(out).clone())
    }

    /// Mean of the quantile values at distorted levels `beta(tau_k)`.
    pub fn q_value_at(&self, state: &[f64], taus: &[f64], distortion: Distortion) -> Result<Vec<f64>> {
        let levels: Vec<f64> = taus
            .iter()
            .map(|&t| check_tau(t).map(|_| distort_tau(t, distortion)))
            .collect::<Result<_>>()?;
        let qv = self.quantile_values(state, &levels)?;
        Ok(column_means(&qv))
    }

    /// Action values from `k` uniform level draws.
    pub fn q_value(&self, state: &[f64], k: usize, distortion: Distortion, rng: &mut Rng) -> Result<Vec<f64>> {
        if k == 0 {
            return Err(Error::Domain("q_value needs at least one level draw".into()));
        }
        let taus: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
        self.q_value_at(state, &taus, distortion)
    }
}

/// Column means of a `k x c` array.
pub fn column_means(a: &Array) -> Vec<f64> {
    let (k, c) = (a.rows(), a.cols());
    (0..c)
        .map(|j| (0..k).map(|i| a.get(i, j)).sum::<f64>() / k as f64)
        .collect()
}
