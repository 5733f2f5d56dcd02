//! Normalization constants of product-form distributions.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// G_0..G_m by the convolution recursion g(k, j) = g(k, j-1) + r_j g(k-1, j).
///
/// Plain arithmetic in `T`; use [`buzen_normalization`] for floating point
/// at scale.
pub fn buzen<T: Scalar>(r: &[T], m: usize) -> Vec<T> {
    let mut g = vec![T::zero(); m + 1];
    g[0] = T::one();
    for &rj in r {
        for k in 1..=m {
            g[k] = g[k] + rj * g[k - 1];
        }
    }
    g
}

/// Normalization with single-server stations of intensity `r` and
/// infinite-server (link) stations whose intensities sum to `link_load`:
/// G_k = sum_d B_{k-d} L^d / d!.
pub fn normalization_with_links<T: Scalar>(r: &[T], link_load: T, m: usize) -> Vec<T> {
    let b = buzen(r, m);
    let mut poisson = vec![T::one(); m + 1];
    for d in 1..=m {
        poisson[d] = poisson[d - 1] * link_load / T::of_usize(d);
    }
    (0..=m).map(|k| (0..=k).fold(T::zero(), |acc, d| acc + b[k - d] * poisson[d])).collect()
}

fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Natural logarithms of G_0..G_m.
///
/// Intensities are scaled by 1/max r before the recursion and the scale is
/// added back as k ln(max r), so the table never overflows.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    pub log_g: Vec<f64>,
    /// ln(max r), the carried scale exponent.
    pub log_scale: f64,
}

impl Normalization {
    pub fn m(&self) -> usize {
        self.log_g.len() - 1
    }

    /// G_k, or a range error if it does not fit in an `f64`.
    pub fn g(&self, k: usize) -> Result<f64> {
        let lg = self.log_g[k];
        let v = lg.exp();
        if !v.is_finite() || (v == 0.0 && lg.is_finite()) {
            return Err(Error::Range { exponent: lg / std::f64::consts::LN_2 });
        }
        Ok(v)
    }

    /// G_{k-1} / G_k.
    pub fn ratio(&self, k: usize) -> f64 {
        assert!(k >= 1);
        (self.log_g[k - 1] - self.log_g[k]).exp()
    }
}

/// Buzen's recursion in the log domain over max-scaled intensities.
pub fn buzen_normalization(r: &[f64], m: usize) -> Result<Normalization> {
    normalization_log(r, 0.0, m)
}

/// Log-domain version of [`normalization_with_links`].
pub fn normalization_log(r: &[f64], link_load: f64, m: usize) -> Result<Normalization> {
    if r.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
        return Err(Error::Domain("traffic intensities must be positive and finite".into()));
    }
    if !(link_load.is_finite() && link_load >= 0.0) {
        return Err(Error::Domain("link load must be finite and >= 0".into()));
    }
    let rmax = r.iter().copied().fold(0.0, f64::max);
    let log_scale = if rmax > 0.0 { rmax.ln() } else { 0.0 };
    let mut lg = vec![f64::NEG_INFINITY; m + 1];
    lg[0] = 0.0;
    for &rj in r {
        let lr = (rj / rmax).ln();
        for k in 1..=m {
            lg[k] = logaddexp(lg[k], lr + lg[k - 1]);
        }
    }
    if link_load > 0.0 {
        // Convolve with (L/rmax)^d / d! in scaled units.
        let ll = link_load.ln() - log_scale;
        let mut log_fact = vec![0.0; m + 1];
        for d in 1..=m {
            log_fact[d] = log_fact[d - 1] + (d as f64).ln();
        }
        let nodes = lg.clone();
        for k in 0..=m {
            let mut acc = f64::NEG_INFINITY;
            for d in 0..=k {
                acc = logaddexp(acc, nodes[k - d] + d as f64 * ll - log_fact[d]);
            }
            lg[k] = acc;
        }
    }
    let log_g: Vec<f64> = lg.iter().enumerate().map(|(k, &v)| v + k as f64 * log_scale).collect();
    if log_g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Range { exponent: f64::INFINITY });
    }
    Ok(Normalization { log_g, log_scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    #[test]
    fn exact_small_tables() {
        let r = [Rational::from_integer(1), Rational::from_integer(2)];
        let g = buzen(&r, 2);
        assert_eq!(g, vec![Rational::from_integer(1), Rational::from_integer(3), Rational::from_integer(7)]);
    }

    #[test]
    fn log_domain_matches_plain() {
        let r = [0.3, 1.7, 0.9, 2.2];
        let plain = buzen(&r, 12);
        let log = buzen_normalization(&r, 12).unwrap();
        for k in 0..=12 {
            assert!((log.g(k).unwrap() / plain[k] - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn huge_tables_stay_finite() {
        let r: Vec<f64> = (0..600).map(|i| 1.0 + (i % 7) as f64 * 0.1).collect();
        let norm = buzen_normalization(&r, 10_000).unwrap();
        let ratio = norm.ratio(10_000);
        assert!(ratio.is_finite() && ratio > 0.0);
        assert!(matches!(norm.g(10_000), Err(Error::Range { .. })));
    }
}
