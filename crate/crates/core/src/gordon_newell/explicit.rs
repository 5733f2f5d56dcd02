//! Explicit product-form distributions over enumerated state spaces.

use std::collections::HashMap;

use serde::Serialize;

use super::network::{Network, NetworkSpec, Station};
use crate::error::{Error, Result};
use crate::model::{Instance, QuantilePolicy};
use crate::scalar::Scalar;

pub const DEFAULT_STATE_CAP: usize = 200_000;

/// Number of ways to place m units in s queues, saturating.
pub fn state_count(s: usize, m: usize) -> usize {
    if s == 0 {
        return usize::from(m == 0);
    }
    // C(m + s - 1, s - 1)
    let k = (s - 1).min(m);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (m + s - 1 - i) as u128 / (i + 1) as u128;
        if c > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    c as usize
}

/// All x in N^s with sum m, in colexicographic order (last coordinate
/// varies slowest).
pub fn enumerate_states(s: usize, m: usize) -> Vec<Vec<u32>> {
    fn rec(s: usize, m: usize, out: &mut Vec<Vec<u32>>) {
        if s == 1 {
            out.push(vec![m as u32]);
            return;
        }
        for last in 0..=m {
            let start = out.len();
            rec(s - 1, m - last, out);
            for x in &mut out[start..] {
                x.push(last as u32);
            }
        }
    }
    let mut out = Vec::with_capacity(state_count(s, m));
    if s == 0 {
        if m == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(s, m, &mut out);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryDistribution<T> {
    pub stations: Vec<Station>,
    pub states: Vec<Vec<u32>>,
    pub probs: Vec<T>,
}

impl<T: Scalar> StationaryDistribution<T> {
    pub fn index(&self) -> HashMap<Vec<u32>, usize> {
        self.states.iter().enumerate().map(|(k, x)| (x.clone(), k)).collect()
    }

    pub fn prob(&self, state: &[u32]) -> Option<T> {
        self.states.iter().position(|x| x == state).map(|k| self.probs[k])
    }

    /// Marginal distribution over the node queues only.
    pub fn node_marginal(&self, n: usize) -> HashMap<Vec<u32>, T> {
        let mut out: HashMap<Vec<u32>, T> = HashMap::new();
        for (x, &p) in self.states.iter().zip(&self.probs) {
            let e = out.entry(x[..n].to_vec()).or_insert_with(T::zero);
            *e = *e + p;
        }
        out
    }

    /// P(queue s non-empty).
    pub fn nonempty_prob(&self, s: usize) -> T {
        self.states.iter().zip(&self.probs).filter(|(x, _)| x[s] > 0).fold(T::zero(), |a, (_, &p)| a + p)
    }
}

/// pi(x) proportional to prod_node r^x * prod_link rho^x / x!.
pub fn product_form<T: Scalar>(net: &Network<T>, m: usize, cap: usize) -> Result<StationaryDistribution<T>> {
    let s = net.stations.len();
    let size = state_count(s, m);
    if size > cap {
        return Err(Error::TooLarge { size, cap });
    }
    let states = enumerate_states(s, m);
    let weights: Vec<T> = states
        .iter()
        .map(|x| {
            let mut w = T::one();
            for (k, &xk) in x.iter().enumerate() {
                let rho = net.intensity[k];
                for c in 1..=xk {
                    w = w * rho;
                    if !net.stations[k].is_node() {
                        w = w / T::of_usize(c as usize);
                    }
                }
            }
            w
        })
        .collect();
    let total = weights.iter().fold(T::zero(), |a, &b| a + b);
    Ok(StationaryDistribution { stations: net.stations.clone(), states, probs: weights.into_iter().map(|w| w / total).collect() })
}

/// Generic entry point for exact or floating specs.
pub fn stationary_from_spec<T: Scalar>(spec: &NetworkSpec<T>, m: usize, cap: usize) -> Result<StationaryDistribution<T>> {
    product_form(&spec.build()?, m, cap)
}

/// Product-form distribution over node queues (travel times ignored).
pub fn stationary_distribution_explicit(instance: &Instance, policy: &QuantilePolicy, m: usize) -> Result<StationaryDistribution<f64>> {
    stationary_from_spec(&NetworkSpec::from_instance(instance, policy, false)?, m, DEFAULT_STATE_CAP)
}

/// Closed-migration-process distribution over node and link queues.
pub fn delay_stationary_explicit(instance: &Instance, policy: &QuantilePolicy, m: usize) -> Result<StationaryDistribution<f64>> {
    if instance.travel_time.is_none() {
        return Err(Error::Precondition("instance has no travel times".into()));
    }
    stationary_from_spec(&NetworkSpec::from_instance(instance, policy, true)?, m, DEFAULT_STATE_CAP)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colex_order_and_counts() {
        let s = enumerate_states(2, 2);
        assert_eq!(s, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(enumerate_states(4, 3).len(), state_count(4, 3));
        assert_eq!(state_count(3, 2), 6);
        assert_eq!(state_count(1, 5), 1);
    }
}
