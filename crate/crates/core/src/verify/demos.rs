//! Small closed-form demonstrations: throughput is not concave in the
//! quantiles for a finite fleet, and the m / (m + n - 1) factor is tight.

use serde::{Deserialize, Serialize};

use super::linear::solve_linear;
use crate::error::{Error, Result};
use crate::gordon_newell::steady_state_summary;
use crate::matrix::Matrix;
use crate::model::{Instance, QuantilePolicy, RewardKind, Units, ValueDistribution};
use crate::relax::{solve_efr, SolverConfig};

/// Expected time for a single unit to return to `target`, by first-step
/// analysis on the jump chain with rates `rates` (diagonal ignored).
pub fn expected_return_time(rates: &Matrix<f64>, target: usize) -> Result<f64> {
    let n = rates.rows();
    let out: Vec<f64> = (0..n).map(|i| (0..n).filter(|&j| j != i).map(|j| rates[(i, j)]).sum()).collect();
    if out.iter().any(|&v| v <= 0.0) {
        return Err(Error::Precondition("every state needs a positive exit rate".into()));
    }
    // h_i = 1/out_i + sum_{j != target} P_ij h_j for i != target.
    let others: Vec<usize> = (0..n).filter(|&i| i != target).collect();
    let k = others.len();
    let a = Matrix::from_fn(k, k, |r, c| {
        let (i, j) = (others[r], others[c]);
        let p = if i == j { 0.0 } else { rates[(i, j)] / out[i] };
        if r == c {
            1.0 - p
        } else {
            -p
        }
    });
    let b: Vec<f64> = others.iter().map(|&i| 1.0 / out[i]).collect();
    let h = solve_linear(a, b)?;
    let mut t = 1.0 / out[target];
    for (r, &j) in others.iter().enumerate() {
        t += rates[(target, j)] / out[target] * h[r];
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonconcavityReport {
    pub eps: f64,
    /// Quantile on B -> C in networks I, II and III.
    pub q_bc: [f64; 3],
    pub return_times: [f64; 3],
    pub closed_forms: [f64; 3],
    pub throughputs: [f64; 3],
    /// Throughput from the product-form analytics, for cross-checking.
    pub analytic_throughputs: [f64; 3],
    pub formulas_match: bool,
    /// throughput(II) < (throughput(I) + throughput(III)) / 2.
    pub nonconcave: bool,
}

/// Three stations A, B, C with demand A->B = B->A = B->C = 1 and C->B = eps;
/// the B->C quantile is 1, (1 + eps) / 2 and eps in networks I, II, III.
pub fn nonconcavity_instance(eps: f64) -> Instance {
    let mut d = Matrix::zeros(3, 3);
    d[(0, 1)] = 1.0;
    d[(1, 0)] = 1.0;
    d[(1, 2)] = 1.0;
    d[(2, 1)] = eps;
    Instance::uniform_dist(Units::Finite(1), RewardKind::Throughput, d, ValueDistribution::Uniform { a: 0.0, b: 1.0 })
}

pub fn nonconcavity_demo(eps: f64) -> Result<NonconcavityReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("need 0 < eps < 1, got {eps}")));
    }
    let instance = nonconcavity_instance(eps);
    let q_bc = [1.0, (1.0 + eps) / 2.0, eps];
    let closed_forms = [(1.0 + 2.0 * eps) / (2.0 * eps), (5.0 * eps + 1.0) / (eps * (3.0 + eps)), 3.0 / (1.0 + eps)];
    let mut return_times = [0.0; 3];
    let mut throughputs = [0.0; 3];
    let mut analytic = [0.0; 3];
    for (k, &q) in q_bc.iter().enumerate() {
        let mut policy = QuantilePolicy::constant(&instance, 1.0);
        policy.q[(1, 2)] = q;
        let rates = Matrix::from_fn(3, 3, |i, j| instance.phi(i, j) * policy.q[(i, j)]);
        return_times[k] = expected_return_time(&rates, 1)?;
        // Two rides per return to B.
        throughputs[k] = 2.0 / return_times[k];
        analytic[k] = steady_state_summary(&instance, &policy, instance.m)?.obj_m.expect("finite fleet");
    }
    let formulas_match = return_times.iter().zip(&closed_forms).all(|(a, b)| (a - b).abs() <= 1e-9 * b.max(1.0));
    // Strict by a margin so equal values never pass on rounding.
    let nonconcave = throughputs[1] < 0.5 * (throughputs[0] + throughputs[2]) - 1e-12;
    Ok(NonconcavityReport {
        eps,
        q_bc,
        return_times,
        closed_forms,
        throughputs,
        analytic_throughputs: analytic,
        formulas_match,
        nonconcave,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessReport {
    pub n: usize,
    pub m: u64,
    pub k: f64,
    /// Exact throughput of the relaxation's policy.
    pub algorithm_value: f64,
    /// n m / (m + n - 1).
    pub closed_form: f64,
    /// Exact throughput with every quantile at one.
    pub all_ones_value: f64,
    /// algorithm_value / all_ones_value.
    pub ratio: f64,
    pub guarantee: f64,
}

/// Cycle 0 -> 1 -> ... -> n-1 -> 0 with rate k on the forward edges and 1
/// on the closing edge, throughput objective.
pub fn tightness_instance(n: usize, m: u64, k: f64) -> Instance {
    let mut d = Matrix::zeros(n, n);
    for i in 0..n - 1 {
        d[(i, i + 1)] = k;
    }
    d[(n - 1, 0)] = 1.0;
    Instance::uniform_dist(Units::Finite(m), RewardKind::Throughput, d, ValueDistribution::Uniform { a: 0.0, b: 1.0 })
}

pub fn tightness_demo(n: usize, m: u64, k: f64) -> Result<TightnessReport> {
    if n < 2 || m < 1 || !(k >= 1.0) {
        return Err(Error::Domain("tightness demo needs n >= 2, m >= 1, k >= 1".into()));
    }
    let instance = tightness_instance(n, m, k);
    let sol = solve_efr(&instance, &SolverConfig::default())?;
    let alg = steady_state_summary(&instance, &QuantilePolicy::new(sol.q.clone()), instance.m)?.obj_m.expect("finite fleet");
    let ones = steady_state_summary(&instance, &QuantilePolicy::constant(&instance, 1.0), instance.m)?.obj_m.expect("finite fleet");
    let (nf, mf) = (n as f64, m as f64);
    Ok(TightnessReport {
        n,
        m,
        k,
        algorithm_value: alg,
        closed_form: nf * mf / (mf + nf - 1.0),
        all_ones_value: ones,
        ratio: alg / ones,
        guarantee: mf / (mf + nf - 1.0),
    })
}
