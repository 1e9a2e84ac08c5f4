//! Return-distribution mathematics.

mod distortion;
mod empirical;
mod loss;
mod summary;
mod wasserstein;

pub use distortion::{distort_tau, Distortion};
pub use empirical::EmpiricalDistribution;
pub use loss::{huber, quantile_huber, LossConfig};
pub use summary::{summarize, Summary};
pub use wasserstein::wasserstein;
