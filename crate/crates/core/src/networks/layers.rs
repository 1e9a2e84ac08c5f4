use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Array, Graph, ParamStore, Var};
use crate::error::Result;
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Softplus,
    /// Slope 0.01 below zero; the derivative at exactly zero is taken as the slope.
    LeakyRelu,
}

pub const LEAKY_SLOPE: f64 = 0.01;

impl Activation {
    pub fn apply(self, g: &mut Graph, x: Var) -> Var {
        match self {
            Activation::Relu => g.relu(x),
            Activation::Softplus => g.softplus(x),
            Activation::LeakyRelu => g.leaky_relu(x, LEAKY_SLOPE),
        }
    }
}

/// Append `name.weight` (`fan_in x fan_out`) and `name.bias` (`1 x fan_out`),
/// uniform in `±1/sqrt(fan_in)`, or all zeros.
pub fn init_linear(params: &mut ParamStore, name: &str, fan_in: usize, fan_out: usize, zero: bool, rng: &mut Rng) {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    let mut draw = |n: usize| -> Vec<f64> {
        if zero {
            vec![0.0; n]
        } else {
            (0..n).map(|_| rng.gen_range(-bound..bound)).collect()
        }
    };
    let w = draw(fan_in * fan_out);
    let b = draw(fan_out);
    params.push(format!("{name}.weight"), Array::matrix(fan_in, fan_out, w).expect("sized"));
    params.push(format!("{name}.bias"), Array::matrix(1, fan_out, b).expect("sized"));
}

/// `x W + b`, with the bias row repeated over the batch.
pub fn dense(g: &mut Graph, x: Var, weight: Var, bias: Var) -> Result<Var> {
    let y = g.matmul(x, weight)?;
    let rows = g.value(y).rows();
    let b = g.repeat_rows(bias, rows)?;
    g.add(y, b)
}

/// A stack of dense layers using consecutive `(weight, bias)` pairs from `vars`.
/// Every layer but the last is followed by `act`.
pub fn mlp(g: &mut Graph, mut x: Var, vars: &[Var], act: Activation) -> Result<Var> {
    let layers = vars.len() / 2;
    for l in 0..layers {
        x = dense(g, x, vars[2 * l], vars[2 * l + 1])?;
        if l + 1 < layers {
            x = act.apply(g, x);
        }
    }
    Ok(x)
}

/// Row-major `rows x dim` one-hot matrix.
pub fn one_hot(indices: &[usize], dim: usize) -> Array {
    let mut v = vec![0.0; indices.len() * dim];
    for (r, &i) in indices.iter().enumerate() {
        v[r * dim + i] = 1.0;
    }
    Array::matrix(indices.len(), dim, v).expect("sized")
}

/// Stack equal-length rows into a matrix.
pub fn stack_rows(rows: &[Vec<f64>]) -> Result<Array> {
    Array::from_rows(rows)
}
