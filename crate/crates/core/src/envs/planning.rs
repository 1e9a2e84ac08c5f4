//! Exact action values by linear solve and value iteration.

use crate::envs::mdp::{MdpSpec, Policy};
use crate::error::{Error, Result};

/// Solve `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        if a[pivot][col].abs() < 1e-14 {
            return Err(Error::Numerical {
                message: "singular linear system".into(),
                diagnostics: format!("column {col}"),
            });
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Ok(x)
}

/// `Q^pi(s, a)` from `Q = R + gamma P_pi Q`, with `Q = 0` at absorbing states.
pub fn policy_q_values(spec: &MdpSpec, policy: &Policy) -> Result<Vec<Vec<f64>>> {
    policy.check_compatible(spec)?;
    let (ns, na) = (spec.num_states(), spec.num_actions());
    let n = ns * na;
    let gamma = spec.gamma();
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    for s in 0..ns {
        for act in 0..na {
            let i = s * na + act;
            a[i][i] = 1.0;
            if spec.is_absorbing(s) {
                continue;
            }
            b[i] = spec.mean_reward(s, act);
            for (s2, &p) in spec.transition_row(s, act).iter().enumerate() {
                if p == 0.0 || spec.is_absorbing(s2) {
                    continue;
                }
                for a2 in 0..na {
                    a[i][s2 * na + a2] -= gamma * p * policy.prob(s2, a2);
                }
            }
        }
    }
    let q = solve_linear(a, b)?;
    Ok(q.chunks(na).map(<[f64]>::to_vec).collect())
}

/// Optimal action values and a greedy policy (ties to the lowest action index).
pub fn value_iteration(spec: &MdpSpec, tol: f64) -> (Vec<Vec<f64>>, Policy) {
    let (ns, na) = (spec.num_states(), spec.num_actions());
    let gamma = spec.gamma();
    let mut q = vec![vec![0.0; na]; ns];
    loop {
        let v: Vec<f64> = q
            .iter()
            .enumerate()
            .map(|(s, row)| {
                if spec.is_absorbing(s) {
                    0.0
                } else {
                    row.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                }
            })
            .collect();
        let mut delta: f64 = 0.0;
        for s in 0..ns {
            if spec.is_absorbing(s) {
                continue;
            }
            for a in 0..na {
                let next: f64 = spec
                    .transition_row(s, a)
                    .iter()
                    .zip(&v)
                    .map(|(p, v)| p * v)
                    .sum();
                let new = spec.mean_reward(s, a) + gamma * next;
                delta = delta.max((new - q[s][a]).abs());
                q[s][a] = new;
            }
        }
        if delta * gamma / (1.0 - gamma) < tol {
            break;
        }
    }
    let greedy: Vec<usize> = q.iter().map(|row| argmax(row)).collect();
    let policy = Policy::deterministic(&greedy, na).expect("argmax is in range");
    (q, policy)
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
