use serde::{Deserialize, Serialize};

use crate::envs::mdp::{MdpSpec, Policy};
use crate::envs::planning::value_iteration;
use crate::error::Result;

/// A policy described in configuration terms, resolved against a concrete MDP.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySpec {
    #[default]
    Uniform,
    /// Greedy policy from value iteration.
    Optimal,
    /// `action` with probability `p`, remaining mass spread evenly.
    Biased { action: usize, p: f64 },
    Table { probs: Vec<Vec<f64>> },
}

impl PolicySpec {
    pub fn resolve(&self, spec: &MdpSpec) -> Result<Policy> {
        let (s, a) = (spec.num_states(), spec.num_actions());
        let policy = match self {
            PolicySpec::Uniform => Policy::uniform(s, a),
            PolicySpec::Optimal => value_iteration(spec, 1e-12).1,
            PolicySpec::Biased { action, p } => Policy::biased(s, a, *action, *p)?,
            PolicySpec::Table { probs } => Policy::new(probs.clone())?,
        };
        policy.check_compatible(spec)?;
        Ok(policy)
    }
}
