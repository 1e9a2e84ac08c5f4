use serde::{Deserialize, Serialize};

use crate::distributions::EmpiricalDistribution;
use crate::error::Result;

/// Mean, requested lower quantiles, and population variance of a sample set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub quantiles: Vec<(f64, f64)>,
    pub variance: f64,
}

impl Summary {
    pub fn quantile(&self, tau: f64) -> Option<f64> {
        self.quantiles.iter().find(|(t, _)| *t == tau).map(|q| q.1)
    }
}

pub fn summarize(samples: &EmpiricalDistribution, taus: &[f64]) -> Result<Summary> {
    let quantiles = taus
        .iter()
        .map(|&t| samples.quantile(t).map(|q| (t, q)))
        .collect::<Result<_>>()?;
    Ok(Summary {
        mean: samples.mean(),
        quantiles,
        variance: samples.variance(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sets() {
        let d = EmpiricalDistribution::new(vec![3.0, 1.0, 2.0]).unwrap();
        let s = summarize(&d, &[0.5]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.quantile(0.5), Some(2.0));
        assert!((s.variance - 2.0 / 3.0).abs() < 1e-15);

        let c = EmpiricalDistribution::new(vec![4.5]).unwrap();
        let s = summarize(&c, &[0.0, 0.3, 1.0]).unwrap();
        assert_eq!(s.mean, 4.5);
        assert!(s.quantiles.iter().all(|q| q.1 == 4.5));
        assert_eq!(s.variance, 0.0);
    }

    #[test]
    fn lower_order_statistic() {
        let d = EmpiricalDistribution::new((1..=10).map(f64::from).collect()).unwrap();
        assert_eq!(d.quantile(0.3).unwrap(), 3.0);
        assert_eq!(d.quantile(0.31).unwrap(), 4.0);
        assert_eq!(d.quantile(0.0).unwrap(), 1.0);
        assert_eq!(d.quantile(1.0).unwrap(), 10.0);
        let w = EmpiricalDistribution::from_atoms(&[(1.0, 0.5), (2.0, 0.5)]).unwrap();
        assert_eq!(w.quantile(0.5).unwrap(), 1.0);
        assert_eq!(w.quantile(0.51).unwrap(), 2.0);
    }
}
