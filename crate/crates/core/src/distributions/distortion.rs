use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Monotone reweighting `beta: [0, 1] -> [0, 1]` of quantile levels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distortion {
    #[default]
    Identity,
    /// Conditional value at risk at level `alpha`: `beta(tau) = alpha * tau`.
    Cvar { alpha: f64 },
}

impl Distortion {
    pub fn cvar(alpha: f64) -> Result<Self> {
        let d = Distortion::Cvar { alpha };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Distortion::Identity => Ok(()),
            Distortion::Cvar { alpha } if alpha > 0.0 && alpha <= 1.0 => Ok(()),
            Distortion::Cvar { alpha } => Err(Error::Config(format!("CVaR level {alpha} outside (0, 1]"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Distortion::Identity => "identity",
            Distortion::Cvar { .. } => "cvar",
        }
    }
}

/// `beta(tau)` for the given distortion.
pub fn distort_tau(tau: f64, d: Distortion) -> f64 {
    let tau = tau.clamp(0.0, 1.0);
    match d {
        Distortion::Identity => tau,
        Distortion::Cvar { alpha } => (alpha * tau).clamp(0.0, 1.0),
    }
}
