//! Measurement: pseudo-sampling, exact return-distribution oracles,
//! fixed-policy comparisons and Monte Carlo action-value estimates.

mod exact;
mod fixed;
mod models;
mod monte_carlo;

pub use exact::{
    bellman_reassemble, bellman_residual, exact_distribution, truncation_horizon, ExactReturnDistribution, PATH_BUDGET,
};
pub use fixed::{
    compare_models, evaluate_fixed, probe_set, EvalConfig, EvalRecord, EvalReport, OnlineSource, StaticSource,
    MAX_PROBES,
};
pub use models::{pseudo_samples, quantile_samples, OwnedModel, ReturnModel};
pub use monte_carlo::{histogram, monte_carlo_estimate, HistogramBin};
