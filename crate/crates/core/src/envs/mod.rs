//! Finite MDPs, sticky actions, rollouts and offline datasets.

mod dataset;
mod env;
mod mdp;
mod policy_spec;
pub mod planning;
pub mod suite;

pub use dataset::{generate_offline, DatasetMeta, OfflineDataset, TransitionRecord};
pub use env::{discounted_return, rollout, rollout_from, Env, EnvStep, Trajectory};
pub use policy_spec::PolicySpec;
pub use mdp::{sample_categorical, MdpSpec, Policy, RewardOutcome, Transition};
