use rand::Rng as _;

use crate::distributions::EmpiricalDistribution;
use crate::envs::MdpSpec;
use crate::error::{Error, Result};
use crate::evaluation::ExactReturnDistribution;
use crate::networks::{pair_encoding, Checkpoint, ConditionalNet, QuantileNetwork};
use crate::rng::Rng;

/// `M` pseudo-returns `G(Z_i | s, a)` with `Z_i ~ U(0, 1)`.
pub fn pseudo_samples(gen: &ConditionalNet, spec: &MdpSpec, s: usize, a: usize, m: usize, rng: &mut Rng) -> Result<EmpiricalDistribution> {
    if m == 0 {
        return Err(Error::Domain("pseudo_samples needs M >= 1".into()));
    }
    spec.check_state(s)?;
    spec.check_action(a)?;
    let cond = pair_encoding(spec, s, a);
    let z: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
    let conds = vec![cond; m];
    EmpiricalDistribution::new(gen.eval_batch(&z, &conds)?)
}

/// `M` draws `theta_a(tau_i | s)` with `tau_i ~ U(0, 1)`.
pub fn quantile_samples(net: &QuantileNetwork, spec: &MdpSpec, s: usize, a: usize, m: usize, rng: &mut Rng) -> Result<EmpiricalDistribution> {
    if m == 0 {
        return Err(Error::Domain("quantile_samples needs M >= 1".into()));
    }
    spec.check_state(s)?;
    spec.check_action(a)?;
    let taus: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
    let q = net.quantile_values(&spec.encode_state(s), &taus)?;
    EmpiricalDistribution::new((0..m).map(|i| q.get(i, a)).collect())
}

/// Anything that can stand for a return distribution at `(s, a)`.
#[derive(Clone, Copy, Debug)]
pub enum ReturnModel<'a> {
    Generator(&'a ConditionalNet),
    Quantile(&'a QuantileNetwork),
    /// Exact atoms; ignores `M` and the RNG.
    Exact(&'a ExactReturnDistribution),
}

impl ReturnModel<'_> {
    pub fn distribution(&self, spec: &MdpSpec, s: usize, a: usize, m: usize, rng: &mut Rng) -> Result<EmpiricalDistribution> {
        match self {
            ReturnModel::Generator(g) => pseudo_samples(g, spec, s, a, m, rng),
            ReturnModel::Quantile(q) => quantile_samples(q, spec, s, a, m, rng),
            ReturnModel::Exact(e) => {
                spec.check_state(s)?;
                spec.check_action(a)?;
                e.distribution(s, a)
            }
        }
    }
}

/// An owned return model, for loading one side of a comparison from disk.
#[derive(Clone, Debug)]
pub enum OwnedModel {
    Generator(ConditionalNet),
    Quantile(QuantileNetwork),
    Exact(ExactReturnDistribution),
}

impl OwnedModel {
    /// The generator if the checkpoint has one, else the online quantile
    /// network. Fails with [`Error::Incompatible`] when the network's input
    /// or action dimensions do not match `spec`.
    pub fn from_checkpoint(ck: &Checkpoint, spec: &MdpSpec) -> Result<Self> {
        let (sd, na) = (spec.state_dim(), spec.num_actions());
        let (model, dims) = if ck.has("generator") {
            let g = ck.conditional("generator")?;
            let dims = (g.arch.state_dim, g.arch.num_actions);
            (OwnedModel::Generator(g), dims)
        } else {
            let q = ck.quantile("quantile")?;
            let dims = (q.arch.state_dim, q.arch.num_actions);
            (OwnedModel::Quantile(q), dims)
        };
        if dims != (sd, na) {
            return Err(Error::Incompatible(format!(
                "checkpoint network expects state dim {} and {} actions; `{}` has {sd} and {na}",
                dims.0,
                dims.1,
                spec.name()
            )));
        }
        Ok(model)
    }

    pub fn as_model(&self) -> ReturnModel<'_> {
        match self {
            OwnedModel::Generator(g) => ReturnModel::Generator(g),
            OwnedModel::Quantile(q) => ReturnModel::Quantile(q),
            OwnedModel::Exact(e) => ReturnModel::Exact(e),
        }
    }
}
