//! Training: replay, critic and generator steps with gradient penalty,
//! quantile-regression steps, and the environment loop that ties them together.

mod config;
mod freeze;
mod gan;
mod quantile;
mod replay;
mod train;

pub use config::{
    Algorithm, EpsilonSchedule, FreezeConfig, GanConfig, PenaltyInput, QuantileNetConfig, TargetMode, TrainConfig,
};
pub use freeze::trainable_mask;
pub use gan::{
    critic_loss_and_grads, critic_update, generator_loss_and_grads, generator_update, interpolate, warm_start, GanBatch, GanPair,
};
pub use quantile::{greedy_actions, pairwise_quantile_loss, quantile_update, Levels, QuantileBatch, QuantileLearner};
pub use replay::ReplayBuffer;
pub use train::{architectures, run_hash, MetricRecord, Trainer};
