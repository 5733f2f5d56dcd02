use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::distribution::{checked_quantile, quantile_to_price, ValueDistribution};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardKind {
    Throughput,
    Welfare,
    Revenue,
}

impl RewardKind {
    pub const ALL: [RewardKind; 3] = [RewardKind::Throughput, RewardKind::Welfare, RewardKind::Revenue];

    pub fn name(self) -> &'static str {
        match self {
            RewardKind::Throughput => "throughput",
            RewardKind::Welfare => "welfare",
            RewardKind::Revenue => "revenue",
        }
    }
}

impl fmt::Display for RewardKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RewardKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "throughput" => Ok(RewardKind::Throughput),
            "welfare" => Ok(RewardKind::Welfare),
            "revenue" => Ok(RewardKind::Revenue),
            other => Err(Error::Unsupported(format!("reward kind {other:?}"))),
        }
    }
}

/// Reward collected per realized ride, I(q).
///
/// At q = 0 the limit value is returned (the support supremum for revenue,
/// which is infinite for the exponential family).
pub fn per_ride_reward<T: Real>(kind: RewardKind, dist: &ValueDistribution<T>, q: T) -> Result<T> {
    let p = quantile_to_price(dist, q)?;
    Ok(match kind {
        RewardKind::Throughput => T::one(),
        RewardKind::Revenue => p,
        RewardKind::Welfare => match *dist {
            ValueDistribution::Exponential { rate } => p + rate.recip(),
            ValueDistribution::Uniform { b, .. } => (p + b) / T::lit(2.0),
        },
    })
}

/// Reward curve R(q) = q I(q), with R(0) = 0.
pub fn reward_curve<T: Real>(kind: RewardKind, dist: &ValueDistribution<T>, q: T) -> Result<T> {
    checked_quantile(q)?;
    if q == T::zero() {
        return Ok(T::zero());
    }
    Ok(q * per_ride_reward(kind, dist, q)?)
}

/// R'(q) on the open interval (0, 1).
pub fn reward_curve_derivative<T: Real>(kind: RewardKind, dist: &ValueDistribution<T>, q: T) -> Result<T> {
    checked_quantile(q)?;
    if q == T::zero() || q == T::one() {
        return Err(Error::Boundary { q: q.to_f64() });
    }
    Ok(marginal_reward(kind, dist, q))
}

/// R'(q) extended to the closed interval by one-sided limits. The right
/// derivative at 0 may be +inf (exponential revenue and welfare).
pub fn marginal_reward<T: Real>(kind: RewardKind, dist: &ValueDistribution<T>, q: T) -> T {
    match kind {
        RewardKind::Throughput => T::one(),
        // dR/dq = p(q) for welfare.
        RewardKind::Welfare => match *dist {
            ValueDistribution::Exponential { rate } => {
                if q <= T::zero() {
                    T::infinity()
                } else {
                    -q.ln() / rate
                }
            }
            ValueDistribution::Uniform { a, b } => b - q * (b - a),
        },
        RewardKind::Revenue => match *dist {
            ValueDistribution::Exponential { rate } => {
                if q <= T::zero() {
                    T::infinity()
                } else {
                    (-q.ln() - T::one()) / rate
                }
            }
            ValueDistribution::Uniform { a, b } => b - T::lit(2.0) * q * (b - a),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcavityReport {
    pub concave: bool,
    pub worst_second_difference: f64,
}

/// Scans R on a uniform grid of `grid_size` points over [0, 1].
pub fn check_concavity<T: Real>(kind: RewardKind, dist: &ValueDistribution<T>, grid_size: usize) -> ConcavityReport {
    let k = grid_size.max(3);
    let h = 1.0 / (k - 1) as f64;
    let values: Vec<f64> = (0..k)
        .map(|s| {
            let q = T::lit((s as f64 * h).min(1.0));
            reward_curve(kind, dist, q).map(|v| v.to_f64()).unwrap_or(f64::NAN)
        })
        .collect();
    let worst = values
        .windows(3)
        .map(|w| w[0] - 2.0 * w[1] + w[2])
        .fold(f64::NEG_INFINITY, f64::max);
    ConcavityReport { concave: worst <= 1e-9, worst_second_difference: worst }
}
