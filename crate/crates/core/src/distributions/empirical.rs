use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite, possibly weighted, multiset of scalar samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    samples: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
}

impl EmpiricalDistribution {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Domain("empirical distribution needs at least one sample".into()));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("non-finite sample".into()));
        }
        Ok(Self { samples, weights: None })
    }

    pub fn weighted(samples: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let mut d = Self::new(samples)?;
        if weights.len() != d.samples.len() {
            return Err(Error::Domain(format!(
                "{} weights for {} samples",
                weights.len(),
                d.samples.len()
            )));
        }
        if weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
            return Err(Error::Domain("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("weights sum to {total}, not 1")));
        }
        d.weights = Some(weights);
        Ok(d)
    }

    pub fn from_atoms(atoms: &[(f64, f64)]) -> Result<Self> {
        Self::weighted(atoms.iter().map(|a| a.0).collect(), atoms.iter().map(|a| a.1).collect())
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_uniform(&self) -> bool {
        self.weights.is_none()
    }

    pub fn weight(&self, i: usize) -> f64 {
        match &self.weights {
            Some(w) => w[i],
            None => 1.0 / self.samples.len() as f64,
        }
    }

    /// `(value, weight)` pairs sorted by value (stable, so ties keep input order).
    pub fn sorted_atoms(&self) -> Vec<(f64, f64)> {
        let mut atoms: Vec<(f64, f64)> = (0..self.len()).map(|i| (self.samples[i], self.weight(i))).collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        atoms
    }

    pub fn mean(&self) -> f64 {
        match &self.weights {
            None => self.samples.iter().sum::<f64>() / self.len() as f64,
            Some(w) => self.samples.iter().zip(w).map(|(x, w)| x * w).sum(),
        }
    }

    /// Population variance (divides by the sample count, or uses the weights).
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        (0..self.len())
            .map(|i| self.weight(i) * (self.samples[i] - m).powi(2))
            .sum()
    }

    /// Lower quantile: the smallest sample whose cumulative weight reaches `tau`.
    /// For uniform weights this is the order statistic at `ceil(tau * M)`.
    pub fn quantile(&self, tau: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::Domain(format!("quantile level {tau} outside [0, 1]")));
        }
        if self.is_uniform() {
            let mut sorted = self.samples.clone();
            sorted.sort_by(f64::total_cmp);
            let m = sorted.len();
            let k = ((tau * m as f64) - 1e-9).ceil().clamp(1.0, m as f64) as usize;
            return Ok(sorted[k - 1]);
        }
        let atoms = self.sorted_atoms();
        let mut acc = 0.0;
        for &(x, w) in &atoms {
            acc += w;
            if acc >= tau - 1e-12 && w > 0.0 {
                return Ok(x);
            }
        }
        Ok(atoms.last().map(|a| a.0).unwrap_or_default())
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}
