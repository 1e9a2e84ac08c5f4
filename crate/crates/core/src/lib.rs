//! Distributional reinforcement learning on small MDPs: implicit quantile
//! networks, a Wasserstein GAN with gradient penalty that generates return
//! samples, and exact return-distribution oracles to check both against.

pub mod autodiff;
pub mod distributions;
pub mod envs;
pub mod networks;
pub mod error;
pub mod evaluation;
pub mod records;
pub mod rng;
pub mod trainer;

pub use error::{Error, Result};
