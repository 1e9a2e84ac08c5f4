//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use minilp::{ComparisonOp, OptimizationDirection, Problem};

/// `W_k` between two discrete distributions by solving the transport LP
/// with cost `|x - y|^k` directly.
pub fn lp_wasserstein(p: &[(f64, f64)], q: &[(f64, f64)], k: i32) -> f64 {
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Vec<_>> = p
        .iter()
        .map(|(x, _)| q.iter().map(|(y, _)| lp.add_var((x - y).abs().powi(k), (0.0, f64::INFINITY))).collect())
        .collect();
    for (i, (_, w)) in p.iter().enumerate() {
        let row: Vec<_> = vars[i].iter().map(|&v| (v, 1.0)).collect();
        lp.add_constraint(&row, ComparisonOp::Eq, *w);
    }
    for (j, (_, w)) in q.iter().enumerate() {
        let col: Vec<_> = vars.iter().map(|r| (r[j], 1.0)).collect();
        lp.add_constraint(&col, ComparisonOp::Eq, *w);
    }
    let cost = lp.solve().expect("transport LP is feasible").objective();
    cost.max(0.0).powf(1.0 / k as f64)
}

/// Quantile Huber loss written out case by case.
pub fn reference_quantile_huber(a: f64, tau: f64, delta: f64) -> f64 {
    if a < 0.0 {
        if -a <= delta {
            (1.0 - tau) * a * a / (2.0 * delta)
        } else {
            (1.0 - tau) * (-a - delta / 2.0)
        }
    } else if a <= delta {
        tau * a * a / (2.0 * delta)
    } else {
        tau * (a - delta / 2.0)
    }
}
