use serde::{Deserialize, Serialize};

use crate::autodiff::{Array, ParamStore};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

/// Adam moments for one [`ParamStore`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    first: Vec<Array>,
    second: Vec<Array>,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &ParamStore) -> Self {
        let zeros: Vec<Array> = params.iter().map(|p| Array::zeros(p.value.shape())).collect();
        Self {
            config,
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    pub fn first_moment(&self, index: usize) -> &Array {
        &self.first[index]
    }

    pub fn second_moment(&self, index: usize) -> &Array {
        &self.second[index]
    }

    /// One bias-corrected Adam update. Entries with `trainable[i] == false` are
    /// left bit-identical, moments included. A non-finite gradient rejects the
    /// whole update.
    pub fn update(&mut self, params: &mut ParamStore, grads: &[Array], trainable: &[bool]) -> Result<()> {
        if grads.len() != params.len() || trainable.len() != params.len() || self.first.len() != params.len() {
            return Err(Error::Contract(format!(
                "adam: {} params, {} grads, {} trainable flags, {} moments",
                params.len(),
                grads.len(),
                trainable.len(),
                self.first.len()
            )));
        }
        for (i, g) in grads.iter().enumerate() {
            if g.shape() != params.get(i).shape() || self.first[i].shape() != g.shape() {
                return Err(Error::Shape {
                    op: "adam",
                    left: params.get(i).shape().to_vec(),
                    right: g.shape().to_vec(),
                });
            }
            if trainable[i] && !g.is_finite() {
                return Err(Error::NonFiniteGradient {
                    name: params.name(i).to_string(),
                });
            }
        }
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);
        for (i, g) in grads.iter().enumerate() {
            if !trainable[i] {
                continue;
            }
            let m = self.first[i].values_mut();
            let v = self.second[i].values_mut();
            let w = params.get_mut(i).values_mut();
            for k in 0..g.len() {
                let gk = g.values()[k];
                m[k] = beta1 * m[k] + (1.0 - beta1) * gk;
                v[k] = beta2 * v[k] + (1.0 - beta2) * gk * gk;
                let m_hat = m[k] / bc1;
                let v_hat = v[k] / bc2;
                w[k] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// Rescale `grads` in place so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm(grads: &mut [Array], max_norm: f64) -> f64 {
    let norm = grads
        .iter()
        .map(|g| g.values().iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        .sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        for g in grads.iter_mut() {
            for v in g.values_mut() {
                *v *= s;
            }
        }
    }
    norm
}
