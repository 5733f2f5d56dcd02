//! Realized flows do not decrease when per-origin quantiles increase.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gordon_newell::steady_state_summary;
use crate::model::{Instance, QuantilePolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub monotone: bool,
    /// Largest f_ij(q) - f_ij(q') over edges (negative or 0 when monotone).
    pub worst_violation: f64,
    pub worst_edge: (usize, usize),
}

pub fn check_flow_monotonicity(instance: &Instance, q: &[f64], q2: &[f64]) -> Result<MonotonicityReport> {
    let n = instance.n;
    if q.len() != n || q2.len() != n {
        return Err(Error::Precondition(format!("point quantiles need length {n}")));
    }
    if q.iter().zip(q2).any(|(a, b)| b < a) {
        return Err(Error::Precondition("second quantile vector must dominate the first".into()));
    }
    let lo = steady_state_summary(instance, &QuantilePolicy::from_point(instance, q), instance.m)?;
    let hi = steady_state_summary(instance, &QuantilePolicy::from_point(instance, q2), instance.m)?;
    let mut worst = (f64::NEG_INFINITY, (0, 0));
    for (i, j) in instance.edges() {
        let d = lo.flows[(i, j)] - hi.flows[(i, j)];
        if d > worst.0 {
            worst = (d, (i, j));
        }
    }
    Ok(MonotonicityReport { monotone: worst.0 <= 1e-10, worst_violation: worst.0, worst_edge: worst.1 })
}
