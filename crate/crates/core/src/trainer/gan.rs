use rand::Rng as _;

use crate::autodiff::{clip_global_norm, AdamConfig, AdamState, Array, Graph};
use crate::error::{Error, Result};
use crate::networks::{Checkpoint, ConditionalArch, ConditionalNet};
use crate::rng::Rng;
use crate::trainer::config::{FreezeConfig, GanConfig, PenaltyInput};
use crate::trainer::freeze::trainable_mask;

/// Added under the square root of the joint gradient norm so its derivative
/// stays finite when the critic is flat.
const NORM_FLOOR: f64 = 1e-12;

/// Generator/critic pair with their optimizers and freeze masks.
#[derive(Clone, Debug)]
pub struct GanPair {
    pub generator: ConditionalNet,
    pub critic: ConditionalNet,
    gen_opt: AdamState,
    critic_opt: AdamState,
    gen_trainable: Vec<bool>,
    critic_trainable: Vec<bool>,
    pub grad_clip: Option<f64>,
}

/// A GAN minibatch. `cond[i]` encodes `(s_t, a_t)`, `next_cond[i]` encodes `(s_{t+1}, a_{t+1})`.
#[derive(Clone, Debug, Default)]
pub struct GanBatch {
    pub pairs: Vec<(usize, usize)>,
    pub cond: Vec<Vec<f64>>,
    pub next_cond: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub terminal: Vec<bool>,
}

impl GanBatch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    fn check(&self) -> Result<()> {
        let m = self.rewards.len();
        if m == 0 || self.cond.len() != m || self.next_cond.len() != m || self.terminal.len() != m {
            return Err(Error::Contract(format!(
                "GAN batch fields disagree: {} rewards, {} cond, {} next_cond, {} terminal flags",
                m,
                self.cond.len(),
                self.next_cond.len(),
                self.terminal.len()
            )));
        }
        Ok(())
    }

    fn discounts(&self, gamma: f64) -> Array {
        Array::column(self.terminal.iter().map(|&t| if t { 0.0 } else { gamma }).collect())
    }
}

impl GanPair {
    pub fn new(generator: ConditionalNet, critic: ConditionalNet, gen_adam: AdamConfig, critic_adam: AdamConfig) -> Self {
        Self {
            gen_opt: AdamState::new(gen_adam, &generator.params),
            critic_opt: AdamState::new(critic_adam, &critic.params),
            gen_trainable: vec![true; generator.params.len()],
            critic_trainable: vec![true; critic.params.len()],
            generator,
            critic,
            grad_clip: None,
        }
    }

    /// Set both learning rates to `scale` times the configured ones.
    pub fn scale_learning_rates(&mut self, cfg: &GanConfig, scale: f64) {
        self.gen_opt.config.lr = cfg.generator_adam().lr * scale;
        self.critic_opt.config.lr = cfg.critic_adam().lr * scale;
    }

    pub fn init(gen_arch: ConditionalArch, critic_arch: ConditionalArch, cfg: &GanConfig, rng: &mut Rng) -> Result<Self> {
        let generator = ConditionalNet::new(gen_arch, rng)?;
        let critic = ConditionalNet::new(critic_arch, rng)?;
        Ok(Self::new(generator, critic, cfg.generator_adam(), cfg.critic_adam()))
    }

    /// Exclude the named generator/critic layers from every later update.
    pub fn freeze(&mut self, freeze: &FreezeConfig) -> Result<()> {
        self.gen_trainable = trainable_mask(&self.generator.params, &freeze.generator, "generator")?;
        self.critic_trainable = trainable_mask(&self.critic.params, &freeze.critic, "critic")?;
        Ok(())
    }

    pub fn generator_trainable(&self) -> &[bool] {
        &self.gen_trainable
    }

    pub fn critic_trainable(&self) -> &[bool] {
        &self.critic_trainable
    }

    fn diagnostics(&self, batch: &GanBatch) -> String {
        format!(
            "batch pairs {:?}; generator norm {:.6e}; critic norm {:.6e}",
            batch.pairs,
            self.generator.params.global_norm(),
            self.critic.params.global_norm()
        )
    }
}

/// Load generator and critic from a checkpoint and freeze the named layers.
/// Layers not frozen keep their loaded values unless `reinitialize` is set,
/// in which case they start from fresh random values.
pub fn warm_start(
    checkpoint: &Checkpoint,
    gen_arch: ConditionalArch,
    critic_arch: ConditionalArch,
    freeze: &FreezeConfig,
    reinitialize: bool,
    cfg: &GanConfig,
    rng: &mut Rng,
) -> Result<GanPair> {
    let mut pair = GanPair::init(gen_arch, critic_arch, cfg, rng)?;
    let saved_gen = checkpoint.conditional("generator")?;
    let saved_critic = checkpoint.conditional("critic")?;
    pair.generator.params.check_compatible(&saved_gen.params)?;
    pair.critic.params.check_compatible(&saved_critic.params)?;
    pair.freeze(freeze)?;
    for (net, saved, mask) in [
        (&mut pair.generator, &saved_gen, &pair.gen_trainable),
        (&mut pair.critic, &saved_critic, &pair.critic_trainable),
    ] {
        for i in 0..net.params.len() {
            if !reinitialize || !mask[i] {
                *net.params.get_mut(i) = saved.params.get(i).clone();
            }
        }
    }
    Ok(pair)
}

fn finish_update(
    opt: &mut AdamState,
    net: &mut ConditionalNet,
    mut grads: Vec<Array>,
    trainable: &[bool],
    clip: Option<f64>,
) -> Result<()> {
    for (g, &t) in grads.iter_mut().zip(trainable) {
        if !t {
            g.values_mut().fill(0.0);
        }
    }
    if let Some(c) = clip {
        clip_global_norm(&mut grads, c);
    }
    opt.update(&mut net.params, &grads, trainable)
}

/// Penalty point `eps x + (1 - eps) x'` between a fake and a bootstrapped sample.
pub fn interpolate(eps: f64, x: f64, x_next: f64) -> f64 {
    eps * x + (1.0 - eps) * x_next
}

/// One critic step. Draws `z, z', eps ~ U[0,1]` per sample, forms
/// `x = G(z|s,a)`, `x' = r + gamma G(z'|s',a')` (just `r` at terminals),
/// `x~ = eps x + (1 - eps) x'`, and descends
/// `(1/m) sum [f(x) - f(x') + lambda (|grad f(x~)| - 1)^2]`.
///
/// With [`PenaltyInput::Return`] the gradient is `df/dx` alone; with
/// [`PenaltyInput::Joint`] it is taken over the whole critic input row
/// `[x~ | encoding(s,a)]`.
///
/// `bootstrap`, when given, replaces `G(z'|s',a')` with the supplied values.
/// Returns the loss before the step.
pub fn critic_update(
    gan: &mut GanPair,
    batch: &GanBatch,
    cfg: &GanConfig,
    gamma: f64,
    bootstrap: Option<&[f64]>,
    rng: &mut Rng,
) -> Result<f64> {
    let (value, grads) = critic_loss_and_grads(gan, batch, cfg, gamma, bootstrap, rng)?;
    finish_update(&mut gan.critic_opt, &mut gan.critic, grads, &gan.critic_trainable, gan.grad_clip)?;
    Ok(value)
}

/// The critic objective of [`critic_update`] and its gradient with respect
/// to every critic parameter, without taking a step.
pub fn critic_loss_and_grads(
    gan: &GanPair,
    batch: &GanBatch,
    cfg: &GanConfig,
    gamma: f64,
    bootstrap: Option<&[f64]>,
    rng: &mut Rng,
) -> Result<(f64, Vec<Array>)> {
    batch.check()?;
    let m = batch.len();
    let mut z = Vec::with_capacity(m);
    let mut z_next = Vec::with_capacity(m);
    let mut eps = Vec::with_capacity(m);
    for _ in 0..m {
        z.push(rng.gen::<f64>());
        z_next.push(rng.gen::<f64>());
        eps.push(rng.gen::<f64>());
    }
    let x = gan.generator.eval_batch(&z, &batch.cond)?;
    let next = match bootstrap {
        Some(v) if v.len() == m => v.to_vec(),
        Some(v) => {
            return Err(Error::Contract(format!("{} bootstrap values for a batch of {m}", v.len())));
        }
        None => gan.generator.eval_batch(&z_next, &batch.next_cond)?,
    };
    let x_next: Vec<f64> = (0..m)
        .map(|i| {
            if batch.terminal[i] {
                batch.rewards[i]
            } else {
                batch.rewards[i] + gamma * next[i]
            }
        })
        .collect();
    let x_mix: Vec<f64> = (0..m).map(|i| interpolate(eps[i], x[i], x_next[i])).collect();

    let mut g = Graph::new();
    let vars = gan.critic.params.bind(&mut g, true);
    let cond = g.constant(Array::from_rows(&batch.cond)?);
    let xv = g.constant(Array::column(x));
    let xn = g.constant(Array::column(x_next));
    let f_x = gan.critic.forward(&mut g, &vars, xv, cond)?;
    let f_next = gan.critic.forward(&mut g, &vars, xn, cond)?;
    let pen = match cfg.penalty_input {
        PenaltyInput::Return => {
            let xm = g.input(Array::column(x_mix));
            let f_mix = gan.critic.forward(&mut g, &vars, xm, cond)?;
            let f_mix_sum = g.sum(f_mix);
            let grad_mix = g.input_gradient(f_mix_sum, xm)?;
            let norm = g.abs(grad_mix);
            let gap = g.offset(norm, -1.0);
            let pen = g.square(gap);
            g.sum(pen)
        }
        PenaltyInput::Joint => {
            let rows: Vec<Vec<f64>> = x_mix
                .iter()
                .zip(&batch.cond)
                .map(|(&v, c)| std::iter::once(v).chain(c.iter().copied()).collect())
                .collect();
            let joined = g.input(Array::from_rows(&rows)?);
            let f_mix = gan.critic.forward_joined(&mut g, &vars, joined)?;
            let f_mix_sum = g.sum(f_mix);
            let grad_mix = g.input_gradient(f_mix_sum, joined)?;
            let sq = g.square(grad_mix);
            let sq = g.sum_cols(sq)?;
            let sq = g.offset(sq, NORM_FLOOR);
            let norm = g.sqrt(sq);
            let gap = g.offset(norm, -1.0);
            let pen = g.square(gap);
            g.sum(pen)
        }
    };
    let pen = g.scale(pen, cfg.lambda);
    let s_x = g.sum(f_x);
    let s_next = g.sum(f_next);
    let diff = g.sub(s_x, s_next)?;
    let total = g.add(diff, pen)?;
    let loss = g.divide(total, m as f64);
    let value = g.value(loss).item();
    if !value.is_finite() {
        return Err(Error::Numerical {
            message: format!("critic loss is {value}"),
            diagnostics: gan.diagnostics(batch),
        });
    }
    let grads = g.backward(loss)?;
    Ok((value, vars.iter().map(|&v| grads.get_or_zeros(&g, v)).collect()))
}

/// One generator step along `-(1/m) grad sum [f(x) - f(x')]`, with the
/// gradient flowing through both `x = G(z|s,a)` and the bootstrap
/// `x' = r + gamma G(z'|s',a')`. The critic is held fixed. Returns the loss
/// before the step.
pub fn generator_update(gan: &mut GanPair, batch: &GanBatch, gamma: f64, rng: &mut Rng) -> Result<f64> {
    let (value, grads) = generator_loss_and_grads(gan, batch, gamma, rng)?;
    finish_update(&mut gan.gen_opt, &mut gan.generator, grads, &gan.gen_trainable, gan.grad_clip)?;
    Ok(value)
}

/// The generator objective of [`generator_update`] and its gradient with
/// respect to every generator parameter, without taking a step.
pub fn generator_loss_and_grads(gan: &GanPair, batch: &GanBatch, gamma: f64, rng: &mut Rng) -> Result<(f64, Vec<Array>)> {
    batch.check()?;
    let m = batch.len();
    let mut z = Vec::with_capacity(m);
    let mut z_next = Vec::with_capacity(m);
    for _ in 0..m {
        z.push(rng.gen::<f64>());
        z_next.push(rng.gen::<f64>());
    }
    let mut g = Graph::new();
    let gvars = gan.generator.params.bind(&mut g, true);
    let cvars = gan.critic.params.bind(&mut g, false);
    let cond = g.constant(Array::from_rows(&batch.cond)?);
    let next_cond = g.constant(Array::from_rows(&batch.next_cond)?);
    let zv = g.constant(Array::column(z));
    let zn = g.constant(Array::column(z_next));
    let x = gan.generator.forward(&mut g, &gvars, zv, cond)?;
    let boot = gan.generator.forward(&mut g, &gvars, zn, next_cond)?;
    let disc = g.constant(batch.discounts(gamma));
    let boot = g.mul(disc, boot)?;
    let r = g.constant(Array::column(batch.rewards.clone()));
    let x_next = g.add(r, boot)?;
    let f_x = gan.critic.forward(&mut g, &cvars, x, cond)?;
    let f_next = gan.critic.forward(&mut g, &cvars, x_next, cond)?;
    let s_x = g.sum(f_x);
    let s_next = g.sum(f_next);
    let diff = g.sub(s_x, s_next)?;
    let neg = g.neg(diff);
    let loss = g.divide(neg, m as f64);
    let value = g.value(loss).item();
    if !value.is_finite() {
        return Err(Error::Numerical {
            message: format!("generator loss is {value}"),
            diagnostics: gan.diagnostics(batch),
        });
    }
    let grads = g.backward(loss)?;
    Ok((value, gvars.iter().map(|&v| grads.get_or_zeros(&g, v)).collect()))
}
