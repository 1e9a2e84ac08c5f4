use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quadratic within `delta`, linear outside.
pub fn huber(a: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::Config(format!("Huber threshold must be positive, got {delta}")));
    }
    Ok(if a.abs() <= delta {
        0.5 * a * a
    } else {
        delta * (a.abs() - 0.5 * delta)
    })
}

/// Asymmetric Huber loss for quantile level `tau`:
/// `|tau - 1{a < 0}| * huber(a, delta) / delta`.
pub fn quantile_huber(a: f64, tau: f64, delta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Domain(format!("quantile level {tau} outside [0, 1]")));
    }
    let weight = (tau - if a < 0.0 { 1.0 } else { 0.0 }).abs();
    Ok(weight * huber(a, delta)? / delta)
}

/// Quantile-regression settings: Huber threshold and the number of online
/// (`n`) and target (`n_prime`) quantile levels drawn per transition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    pub delta: f64,
    pub n: usize,
    pub n_prime: usize,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            delta: 1.0,
            n: 8,
            n_prime: 8,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) {
            return Err(Error::Config(format!("delta must be positive, got {}", self.delta)));
        }
        if self.n == 0 || self.n_prime == 0 {
            return Err(Error::Config("N and N' must be at least 1".into()));
        }
        Ok(())
    }
}
