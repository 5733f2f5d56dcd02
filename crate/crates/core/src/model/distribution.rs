use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Customer value distribution on a single origin-destination pair.
///
/// Serialized as `{"family": "exponential", "params": {"rate": ..}}` or
/// `{"family": "uniform", "params": {"a": .., "b": ..}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "lowercase")]
pub enum ValueDistribution<T = f64> {
    Exponential { rate: T },
    Uniform { a: T, b: T },
}

impl<T: Real> ValueDistribution<T> {
    pub fn exponential(rate: T) -> Self {
        ValueDistribution::Exponential { rate }
    }

    pub fn uniform(a: T, b: T) -> Self {
        ValueDistribution::Uniform { a, b }
    }

    pub fn check(&self) -> Result<()> {
        match *self {
            ValueDistribution::Exponential { rate } => {
                if !(rate.is_finite() && rate > T::zero()) {
                    return Err(Error::Domain(format!("exponential rate must be positive, got {rate:?}")));
                }
            }
            ValueDistribution::Uniform { a, b } => {
                if !(a.is_finite() && b.is_finite() && a >= T::zero() && a < b) {
                    return Err(Error::Domain(format!("uniform needs 0 <= a < b, got a={a:?} b={b:?}")));
                }
            }
        }
        Ok(())
    }

    /// Infimum and supremum of the support.
    pub fn support(&self) -> (T, T) {
        match *self {
            ValueDistribution::Exponential { .. } => (T::zero(), T::infinity()),
            ValueDistribution::Uniform { a, b } => (a, b),
        }
    }

    pub fn mean(&self) -> T {
        match *self {
            ValueDistribution::Exponential { rate } => rate.recip(),
            ValueDistribution::Uniform { a, b } => (a + b) / T::lit(2.0),
        }
    }

    pub fn cdf(&self, p: T) -> T {
        T::one() - self.survival(p)
    }

    /// P[V > p].
    pub fn survival(&self, p: T) -> T {
        match *self {
            ValueDistribution::Exponential { rate } => {
                if p <= T::zero() {
                    T::one()
                } else {
                    (-rate * p).exp()
                }
            }
            ValueDistribution::Uniform { a, b } => {
                if p <= a {
                    T::one()
                } else if p >= b {
                    T::zero()
                } else {
                    (b - p) / (b - a)
                }
            }
        }
    }
}

fn check_quantile<T: Real>(q: T) -> Result<()> {
    if q.is_nan() || q < T::zero() || q > T::one() {
        return Err(Error::Domain(format!("quantile {q:?} outside [0, 1]")));
    }
    Ok(())
}

/// Price at which a fraction `q` of customers still accepts: F^{-1}(1 - q).
pub fn quantile_to_price<T: Real>(dist: &ValueDistribution<T>, q: T) -> Result<T> {
    check_quantile(q)?;
    Ok(match *dist {
        ValueDistribution::Exponential { rate } => {
            if q == T::zero() {
                T::infinity()
            } else {
                -q.ln() / rate
            }
        }
        ValueDistribution::Uniform { a, b } => b - q * (b - a),
    })
}

/// Fraction of customers whose value exceeds `p`: 1 - F(p). Prices outside
/// the support clamp to 0 or 1.
pub fn price_to_quantile<T: Real>(dist: &ValueDistribution<T>, p: T) -> Result<T> {
    if p.is_nan() {
        return Err(Error::Domain("price is NaN".into()));
    }
    Ok(dist.survival(p))
}

pub(crate) fn checked_quantile<T: Real>(q: T) -> Result<()> {
    check_quantile(q)
}
