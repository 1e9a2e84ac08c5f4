use serde::{Deserialize, Serialize};

use crate::autodiff::{Array, Graph, ParamStore, Var};
use crate::envs::MdpSpec;
use crate::error::{Error, Result};
use crate::networks::layers::{init_linear, mlp, Activation};
use crate::rng::Rng;

/// Layout of a scalar-in, scalar-out MLP conditioned on `(state, action)`.
/// Input row is `[x | state encoding | action one-hot]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionalArch {
    pub state_dim: usize,
    pub num_actions: usize,
    pub width: usize,
    pub hidden_layers: usize,
    pub activation: Activation,
    pub zero_output: bool,
}

impl ConditionalArch {
    /// Three ReLU hidden layers, zero output layer.
    pub fn generator(state_dim: usize, num_actions: usize, width: usize) -> Self {
        Self {
            state_dim,
            num_actions,
            width,
            hidden_layers: 3,
            activation: Activation::Relu,
            zero_output: true,
        }
    }

    /// Three softplus hidden layers so the input gradient stays differentiable.
    pub fn critic(state_dim: usize, num_actions: usize, width: usize) -> Self {
        Self {
            state_dim,
            num_actions,
            width,
            hidden_layers: 3,
            activation: Activation::Softplus,
            zero_output: false,
        }
    }

    pub fn cond_dim(&self) -> usize {
        self.state_dim + self.num_actions
    }

    pub fn validate(&self) -> Result<()> {
        if self.state_dim == 0 || self.num_actions == 0 || (self.hidden_layers > 0 && self.width == 0) {
            return Err(Error::Config(format!("conditional network dimensions must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// Conditional scalar network, used both as the return generator `G(z | s, a)`
/// and as the critic `f(x | s, a)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalNet {
    pub arch: ConditionalArch,
    pub params: ParamStore,
}

pub type GeneratorNetwork = ConditionalNet;
pub type CriticNetwork = ConditionalNet;

/// `[state encoding | action one-hot]` for a pair.
pub fn pair_encoding(spec: &MdpSpec, s: usize, a: usize) -> Vec<f64> {
    let mut v = spec.encode_state(s);
    let base = v.len();
    v.resize(base + spec.num_actions(), 0.0);
    v[base + a] = 1.0;
    v
}

impl ConditionalNet {
    pub fn new(arch: ConditionalArch, rng: &mut Rng) -> Result<Self> {
        arch.validate()?;
        let mut params = ParamStore::new();
        let mut fan_in = 1 + arch.cond_dim();
        for l in 0..arch.hidden_layers {
            init_linear(&mut params, &format!("layer{l}"), fan_in, arch.width, false, rng);
            fan_in = arch.width;
        }
        init_linear(&mut params, &format!("layer{}", arch.hidden_layers), fan_in, 1, arch.zero_output, rng);
        Ok(Self { arch, params })
    }

    /// Names of the layers in input-to-output order.
    pub fn layer_names(&self) -> Vec<String> {
        (0..=self.arch.hidden_layers).map(|l| format!("layer{l}")).collect()
    }

    /// `x` is `B x 1`, `cond` is `B x cond_dim`; returns `B x 1`.
    pub fn forward(&self, g: &mut Graph, vars: &[Var], x: Var, cond: Var) -> Result<Var> {
        let input = g.concat_cols(x, cond)?;
        self.forward_joined(g, vars, input)
    }

    /// Forward pass on rows already laid out as `[x | cond]`.
    pub fn forward_joined(&self, g: &mut Graph, vars: &[Var], input: Var) -> Result<Var> {
        mlp(g, input, vars, self.arch.activation)
    }

    /// Batched evaluation outside of any training graph.
    pub fn eval_batch(&self, xs: &[f64], conds: &[Vec<f64>]) -> Result<Vec<f64>> {
        if xs.len() != conds.len() || xs.is_empty() {
            return Err(Error::Shape {
                op: "conditional eval",
                left: vec![xs.len()],
                right: vec![conds.len()],
            });
        }
        let mut g = Graph::new();
        let vars = self.params.bind(&mut g, false);
        let x = g.constant(Array::column(xs.to_vec()));
        let c = g.constant(Array::from_rows(conds)?);
        let out = self.forward(&mut g, &vars, x, c)?;
        Ok(g.value(out).values().to_vec())
    }

    /// Generator output for noise `z` at a pair encoding.
    pub fn generate(&self, z: f64, cond: &[f64]) -> Result<f64> {
        if !(0.0..=1.0).contains(&z) {
            return Err(Error::Domain(format!("noise {z} outside [0, 1]")));
        }
        Ok(self.eval_batch(&[z], &[cond.to_vec()])?[0])
    }

    /// Critic score of return value `x` at a pair encoding.
    pub fn criticize(&self, x: f64, cond: &[f64]) -> Result<f64> {
        Ok(self.eval_batch(&[x], &[cond.to_vec()])?[0])
    }
}
