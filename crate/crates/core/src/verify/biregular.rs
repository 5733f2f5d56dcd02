//! Weighted biregular graph between S_{n,m} and S_{n,m-1}: state t is
//! joined to t - e_i with weight t_i / m.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gordon_newell::{enumerate_states, state_count};
use crate::scalar::Scalar;

pub const BIREGULAR_CAP: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiregularGraph<T> {
    pub n: usize,
    pub m: usize,
    /// States with m units.
    pub upper: Vec<Vec<u32>>,
    /// States with m - 1 units.
    pub lower: Vec<Vec<u32>>,
    /// (upper index, lower index, weight).
    pub edges: Vec<(usize, usize, T)>,
    /// Weight sum at each upper state (should be 1).
    pub upper_sums: Vec<T>,
    /// Weight sum at each lower state (should be (m + n - 1) / m).
    pub lower_sums: Vec<T>,
}

impl<T: Scalar> BiregularGraph<T> {
    /// Largest deviation of the two weight sums from 1 and (m+n-1)/m.
    pub fn max_deviation(&self) -> T {
        let one = T::one();
        let target = T::of_usize(self.m + self.n - 1) / T::of_usize(self.m);
        let dev = |v: &[T], t: T| v.iter().map(|&x| (x - t).abs()).fold(T::zero(), |a, b| if b > a { b } else { a });
        let a = dev(&self.upper_sums, one);
        let b = dev(&self.lower_sums, target);
        if a > b {
            a
        } else {
            b
        }
    }
}

pub fn build_biregular_graph<T: Scalar>(n: usize, m: usize) -> Result<BiregularGraph<T>> {
    if n == 0 || m == 0 {
        return Err(Error::Domain("biregular graph needs n >= 1 and m >= 1".into()));
    }
    let size = state_count(n, m).saturating_add(state_count(n, m - 1));
    if size > BIREGULAR_CAP {
        return Err(Error::TooLarge { size, cap: BIREGULAR_CAP });
    }
    let upper = enumerate_states(n, m);
    let lower = enumerate_states(n, m - 1);
    let index: std::collections::HashMap<&[u32], usize> = lower.iter().enumerate().map(|(k, s)| (s.as_slice(), k)).collect();
    let mut edges = Vec::new();
    let mut upper_sums = vec![T::zero(); upper.len()];
    let mut lower_sums = vec![T::zero(); lower.len()];
    let mt = T::of_usize(m);
    for (a, t) in upper.iter().enumerate() {
        for i in 0..n {
            if t[i] == 0 {
                continue;
            }
            let mut s = t.clone();
            s[i] -= 1;
            let b = index[s.as_slice()];
            let w = T::of_usize(t[i] as usize) / mt;
            upper_sums[a] = upper_sums[a] + w;
            lower_sums[b] = lower_sums[b] + w;
            edges.push((a, b, w));
        }
    }
    Ok(BiregularGraph { n, m, upper, lower, edges, upper_sums, lower_sums })
}
