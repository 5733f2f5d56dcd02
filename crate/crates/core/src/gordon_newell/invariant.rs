//! Invariant vectors by Grassmann-Taksar-Heyman elimination.

use crate::error::{Error, Result};
use crate::graph;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Stationary vector of the chain with off-diagonal transition weights
/// `rates` (a routing matrix or a generator; the diagonal is ignored).
///
/// GTH elimination uses no subtractions, so it stays accurate for nearly
/// decomposable chains. Fails with [`Error::Reducible`] naming a closed
/// class when the chain is not irreducible.
pub fn gth<T: Scalar>(rates: &Matrix<T>) -> Result<Vec<T>> {
    let n = rates.rows();
    assert!(rates.is_square());
    if n == 0 {
        return Ok(Vec::new());
    }
    if let Some(closed) = graph::closed_class(n, |i, j| i != j && rates[(i, j)] > T::zero()) {
        return Err(Error::Reducible { closed });
    }
    let mut p = rates.clone();
    for i in 0..n {
        p[(i, i)] = T::zero();
    }
    let mut s = vec![T::zero(); n];
    for k in (1..n).rev() {
        let sk = (0..k).fold(T::zero(), |acc, j| acc + p[(k, j)]);
        s[k] = sk;
        for i in 0..k {
            let pik = p[(i, k)];
            if pik == T::zero() {
                continue;
            }
            let f = pik / sk;
            for j in 0..k {
                let pkj = p[(k, j)];
                if pkj != T::zero() {
                    p[(i, j)] = p[(i, j)] + f * pkj;
                }
            }
        }
    }
    let mut pi = vec![T::zero(); n];
    pi[0] = T::one();
    for k in 1..n {
        let acc = (0..k).fold(T::zero(), |acc, i| acc + pi[i] * p[(i, k)]);
        pi[k] = acc / s[k];
    }
    let total = pi.iter().fold(T::zero(), |a, &b| a + b);
    Ok(pi.into_iter().map(|v| v / total).collect())
}

/// Invariant row vector w of a row-stochastic matrix: w lambda = w, sum w = 1.
pub fn invariant_distribution<T: Scalar>(lambda: &Matrix<T>) -> Result<Vec<T>> {
    gth(lambda)
}

/// max_j |(w lambda)_j - w_j|.
pub fn residual(lambda: &Matrix<f64>, w: &[f64]) -> f64 {
    let wl = lambda.left_mul(w);
    wl.iter().zip(w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}
