use rand::Rng as _;

use crate::autodiff::{clip_global_norm, AdamConfig, AdamState, Array, Graph, Var};
use crate::envs::planning::argmax;
use crate::error::{Error, Result};
use crate::networks::{one_hot, QuantileNetwork};
use crate::rng::Rng;
use crate::trainer::freeze::trainable_mask;

/// Online and target quantile networks with the online optimizer.
#[derive(Clone, Debug)]
pub struct QuantileLearner {
    pub online: QuantileNetwork,
    pub target: QuantileNetwork,
    opt: AdamState,
    trainable: Vec<bool>,
    pub grad_clip: Option<f64>,
}

/// Quantile-regression minibatch. `next_actions` fixes `a'`; when absent the
/// greedy action under the online network's mean is used.
#[derive(Clone, Debug, Default)]
pub struct QuantileBatch {
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub next_states: Vec<Vec<f64>>,
    pub next_actions: Option<Vec<usize>>,
    pub terminal: Vec<bool>,
}

/// How quantile levels are chosen for one update.
#[derive(Clone, Debug, PartialEq)]
pub enum Levels {
    /// `n` online and `n_prime` target levels drawn uniformly per transition.
    Uniform { n: usize, n_prime: usize },
    /// The same levels for every transition.
    Fixed { taus: Vec<f64>, taus_prime: Vec<f64> },
}

impl Levels {
    fn draw(&self, batch: usize, rng: &mut Rng) -> (Vec<f64>, Vec<f64>, usize, usize) {
        match self {
            Levels::Uniform { n, n_prime } => {
                let t: Vec<f64> = (0..batch * n).map(|_| rng.gen::<f64>()).collect();
                let tp: Vec<f64> = (0..batch * n_prime).map(|_| rng.gen::<f64>()).collect();
                (t, tp, *n, *n_prime)
            }
            Levels::Fixed { taus, taus_prime } => {
                let t = (0..batch).flat_map(|_| taus.iter().copied()).collect();
                let tp = (0..batch).flat_map(|_| taus_prime.iter().copied()).collect();
                (t, tp, taus.len(), taus_prime.len())
            }
        }
    }
}

impl QuantileLearner {
    pub fn new(online: QuantileNetwork, lr: f64) -> Self {
        Self {
            opt: AdamState::new(AdamConfig::with_lr(lr), &online.params),
            trainable: vec![true; online.params.len()],
            target: online.clone(),
            online,
            grad_clip: None,
        }
    }

    pub fn freeze(&mut self, layers: &[String]) -> Result<()> {
        self.trainable = trainable_mask(&self.online.params, layers, "quantile network")?;
        Ok(())
    }

    pub fn sync_target(&mut self) {
        self.target.params = self.online.params.clone();
    }

    pub fn trainable(&self) -> &[bool] {
        &self.trainable
    }
}

/// `(1/(B N N')) sum_{b,i,j} |tau_bi - 1{a_bij < 0}| huber(a_bij, delta) / delta`
/// with `a_bij = targets[b, j] - pred[b*N + i]`.
///
/// `pred` is a `(B*N) x 1` graph node, `targets` is `B x N'`, `taus` has `B*N` entries.
pub fn pairwise_quantile_loss(g: &mut Graph, pred: Var, targets: &Array, taus: &[f64], delta: f64) -> Result<Var> {
    let (b, n_prime) = (targets.rows(), targets.cols());
    let bn = g.value(pred).rows();
    if b == 0 || bn % b != 0 || taus.len() != bn || g.value(pred).cols() != 1 {
        return Err(Error::Shape {
            op: "pairwise_quantile_loss",
            left: g.value(pred).shape().to_vec(),
            right: targets.shape().to_vec(),
        });
    }
    let n = bn / b;
    let mut tmat = Vec::with_capacity(bn * n_prime);
    for row in 0..bn {
        let src = row / n;
        tmat.extend_from_slice(&targets.values()[src * n_prime..(src + 1) * n_prime]);
    }
    let tmat = g.constant(Array::matrix(bn, n_prime, tmat)?);
    let spread = g.broadcast_cols(pred, n_prime)?;
    let td = g.sub(tmat, spread)?;
    let weights: Vec<f64> = g
        .value(td)
        .values()
        .iter()
        .enumerate()
        .map(|(k, &a)| (taus[k / n_prime] - if a < 0.0 { 1.0 } else { 0.0 }).abs())
        .collect();
    let weights = g.constant(Array::matrix(bn, n_prime, weights)?);
    let h = g.huber(td, delta);
    let wh = g.mul(weights, h)?;
    let total = g.sum(wh);
    Ok(g.divide(total, delta * (bn * n_prime) as f64))
}

fn group_means(values: &Array, group: usize) -> Vec<Vec<f64>> {
    let a = values.cols();
    (0..values.rows() / group)
        .map(|b| {
            (0..a)
                .map(|j| (0..group).map(|i| values.get(b * group + i, j)).sum::<f64>() / group as f64)
                .collect()
        })
        .collect()
}

/// One quantile-regression step on the online network. Returns the loss
/// before the step.
pub fn quantile_update(
    learner: &mut QuantileLearner,
    batch: &QuantileBatch,
    levels: &Levels,
    delta: f64,
    gamma: f64,
    rng: &mut Rng,
) -> Result<f64> {
    let m = batch.rewards.len();
    if m == 0
        || batch.states.len() != m
        || batch.actions.len() != m
        || batch.next_states.len() != m
        || batch.terminal.len() != m
        || batch.next_actions.as_ref().is_some_and(|a| a.len() != m)
    {
        return Err(Error::Contract("quantile batch fields disagree in length".into()));
    }
    let (taus, taus_prime, n, n_prime) = levels.draw(m, rng);
    if n == 0 || n_prime == 0 {
        return Err(Error::Config("quantile updates need N, N' >= 1".into()));
    }
    let num_actions = learner.online.arch.num_actions;

    let next_actions = match &batch.next_actions {
        Some(a) => a.clone(),
        None => {
            let q = eval_levels(&learner.online, &batch.next_states, &taus_prime)?;
            group_means(&q, n_prime).iter().map(|row| argmax(row)).collect()
        }
    };
    let tq = eval_levels(&learner.target, &batch.next_states, &taus_prime)?;
    let mut targets = Vec::with_capacity(m * n_prime);
    for b in 0..m {
        let disc = if batch.terminal[b] { 0.0 } else { gamma };
        for j in 0..n_prime {
            targets.push(batch.rewards[b] + disc * tq.get(b * n_prime + j, next_actions[b]));
        }
    }
    let targets = Array::matrix(m, n_prime, targets)?;

    let mut g = Graph::new();
    let vars = learner.online.params.bind(&mut g, true);
    let states = g.constant(Array::from_rows(&batch.states)?);
    let tv = g.constant(Array::column(taus.clone()));
    let out = learner.online.forward(&mut g, &vars, states, tv)?;
    let rows: Vec<usize> = batch.actions.iter().flat_map(|&a| std::iter::repeat(a).take(n)).collect();
    let mask = g.constant(one_hot(&rows, num_actions));
    let picked = g.mul(out, mask)?;
    let pred = g.sum_cols(picked)?;
    let loss = pairwise_quantile_loss(&mut g, pred, &targets, &taus, delta)?;
    let value = g.value(loss).item();
    if !value.is_finite() {
        return Err(Error::Numerical {
            message: format!("quantile loss is {value}"),
            diagnostics: format!("online norm {:.6e}", learner.online.params.global_norm()),
        });
    }
    let grads = g.backward(loss)?;
    let mut grads: Vec<Array> = vars.iter().map(|&v| grads.get_or_zeros(&g, v)).collect();
    for (gr, &t) in grads.iter_mut().zip(&learner.trainable) {
        if !t {
            gr.values_mut().fill(0.0);
        }
    }
    if let Some(c) = learner.grad_clip {
        clip_global_norm(&mut grads, c);
    }
    learner.opt.update(&mut learner.online.params, &grads, &learner.trainable)?;
    Ok(value)
}

/// Quantile values for per-state level lists: `taus` holds `len(states) * k` entries.
pub(crate) fn eval_levels(net: &QuantileNetwork, states: &[Vec<f64>], taus: &[f64]) -> Result<Array> {
    let mut g = Graph::new();
    let vars = net.params.bind(&mut g, false);
    let s = g.constant(Array::from_rows(states)?);
    let t = g.constant(Array::column(taus.to_vec()));
    let out = net.forward(&mut g, &vars, s, t)?;
    Ok(g.value(out).clone())
}

/// Mean action values at each state from `k` shared level draws.
pub fn greedy_actions(net: &QuantileNetwork, states: &[Vec<f64>], k: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    let taus: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
    let all: Vec<f64> = states.iter().flat_map(|_| taus.iter().copied()).collect();
    let q = eval_levels(net, states, &all)?;
    Ok(group_means(&q, k).iter().map(|row| argmax(row)).collect())
}
