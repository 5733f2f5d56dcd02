//! Poisson upper-tail bound and the exact tail it dominates.

use crate::error::{Error, Result};

/// exp(-x^2 / (2 lambda) * (1 - x / lambda)), a bound on P[X > lambda + x]
/// for X ~ Poisson(lambda) and 0 <= x <= lambda.
pub fn poisson_tail_bound(lambda: f64, x: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    if !(0.0..=lambda).contains(&x) {
        return Err(Error::Domain(format!("need 0 <= x <= lambda, got x = {x}")));
    }
    Ok((-x * x / (2.0 * lambda) * (1.0 - x / lambda)).exp())
}

/// P[X > y] for X ~ Poisson(lambda), summing the pmf upwards from
/// floor(y) + 1.
pub fn poisson_tail_exact(lambda: f64, y: f64) -> f64 {
    if y < 0.0 {
        return 1.0;
    }
    let k0 = y.floor() as u64 + 1;
    let ln_fact: f64 = (1..=k0).map(|k| (k as f64).ln()).sum();
    let mut term = (k0 as f64 * lambda.ln() - lambda - ln_fact).exp();
    let mut sum = 0.0;
    let mut k = k0;
    // Terms grow until k passes lambda, then decay geometrically.
    while term > 0.0 {
        sum += term;
        k += 1;
        term *= lambda / k as f64;
        if k as f64 > lambda && term <= sum * 1e-17 {
            break;
        }
    }
    sum.min(1.0)
}

/// Grid points (lambda, x, bound, exact) where the bound falls below the
/// exact tail, over
/// lambda in 1..=lambda_max and x in {0, l/4, l/2, 3l/4, l}.
pub fn tail_bound_violations(lambda_max: u32) -> Vec<(f64, f64, f64, f64)> {
    let mut out = Vec::new();
    for l in 1..=lambda_max {
        let lambda = l as f64;
        for f in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let x = f * lambda;
            let bound = poisson_tail_bound(lambda, x).expect("grid inside domain");
            let exact = poisson_tail_exact(lambda, lambda + x);
            if bound < exact {
                out.push((lambda, x, bound, exact));
            }
        }
    }
    out
}
