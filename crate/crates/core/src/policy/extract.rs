//! From relaxation solutions to executable policies.

use serde::{Deserialize, Serialize};

use super::ext_real;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{quantile_to_price, Instance, QuantilePolicy};
use crate::relax::{RelaxSolution, Variant};

/// Below this a denominator counts as zero.
const ZERO_FLOW: f64 = 1e-12;
/// Rates above this cannot be dropped silently.
const RATE_TOL: f64 = 1e-9;

/// State-independent prices over the demand support (`None` elsewhere).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricePolicy {
    #[serde(with = "ext_real::matrix")]
    pub prices: Matrix<Option<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<Variant>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relaxation_value: Option<f64>,
}

impl PricePolicy {
    pub fn from_quantiles(instance: &Instance, q: &Matrix<f64>) -> Result<Self> {
        let mut prices = Matrix::filled(instance.n, instance.n, None);
        for (i, j) in instance.edges() {
            prices[(i, j)] = Some(quantile_to_price(instance.dist(i, j)?, q[(i, j)])?);
        }
        Ok(PricePolicy { prices, variant: None, relaxation_value: None })
    }
}

/// Per-node demand circulation residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CirculationReport {
    pub balanced: bool,
    pub worst_node: usize,
    pub imbalance: f64,
}

pub fn demand_circulation_check(instance: &Instance, q: &Matrix<f64>, tol: f64) -> CirculationReport {
    let mut worst = (0, 0.0);
    for i in 0..instance.n {
        let inflow: f64 = (0..instance.n).map(|k| instance.phi(k, i) * q[(k, i)]).sum();
        let outflow: f64 = (0..instance.n).map(|j| instance.phi(i, j) * q[(i, j)]).sum();
        let d = (inflow - outflow).abs();
        if d > worst.1 {
            worst = (i, d);
        }
    }
    CirculationReport { balanced: worst.1 <= tol, worst_node: worst.0, imbalance: worst.1 }
}

/// z_ij / denom_i with a degeneracy check at numerically zero denominators.
fn normalize_rows(z: &Matrix<f64>, denom: &[f64], what: &str) -> Result<Matrix<f64>> {
    let n = z.rows();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j || z[(i, j)] <= 0.0 {
                continue;
            }
            if denom[i] <= ZERO_FLOW {
                if z[(i, j)] > RATE_TOL {
                    return Err(Error::Degenerate(format!(
                        "{what} rate {} at station {i} with no flow to normalise by",
                        z[(i, j)]
                    )));
                }
                continue;
            }
            out[(i, j)] = z[(i, j)] / denom[i];
        }
        // Round-off can push a row sum a hair past 1.
        let s: f64 = out.row(i).iter().sum();
        if s > 1.0 {
            for j in 0..n {
                out[(i, j)] /= s;
            }
        }
    }
    Ok(out)
}

/// Prices and the controls they imply for a relaxation solution.
pub fn prices_from_relaxation(instance: &Instance, sol: &RelaxSolution) -> Result<(PricePolicy, QuantilePolicy)> {
    let n = instance.n;
    if sol.q.rows() != n || sol.q.cols() != n {
        return Err(Error::Precondition(format!("relaxation is for {} stations, instance has {n}", sol.q.rows())));
    }
    let inflow = |q: &Matrix<f64>| -> Vec<f64> {
        (0..n).map(|i| (0..n).map(|k| instance.phi(k, i) * q[(k, i)]).sum()).collect()
    };
    let policy = match sol.variant {
        Variant::Efr | Variant::Multi | Variant::Point => QuantilePolicy::new(sol.q.clone()),
        Variant::RateLimited => QuantilePolicy::new(sol.scaled_q.clone().unwrap_or_else(|| sol.q.clone())),
        Variant::Supply => {
            let z = sol.z.as_ref().ok_or_else(|| Error::Precondition("supply solution without z".into()))?;
            let r = normalize_rows(z, &inflow(&sol.q), "redirection")?;
            QuantilePolicy::new(sol.q.clone()).with_redirect(r)
        }
        Variant::Matching => {
            let z = sol.z.as_ref().ok_or_else(|| Error::Precondition("matching solution without z".into()))?;
            let accepted: Vec<f64> = (0..n).map(|i| (0..n).map(|k| instance.phi(i, k) * sol.q[(i, k)]).sum()).collect();
            let mu = normalize_rows(z, &accepted, "matching")?;
            QuantilePolicy::new(sol.q.clone()).with_matching(mu)
        }
        Variant::Noprice | Variant::NopriceRateLimited => {
            let z = sol.z.as_ref().ok_or_else(|| Error::Precondition("no-price solution without z".into()))?;
            let r = normalize_rows(z, &inflow(&sol.q), "redirection")?;
            // All quantiles raised to one; redirection probabilities kept.
            QuantilePolicy::constant(instance, 1.0).with_redirect(r)
        }
    };
    let mut prices = PricePolicy::from_quantiles(instance, &policy.q)?;
    prices.variant = Some(sol.variant);
    prices.relaxation_value = Some(sol.value);
    Ok((prices, policy))
}
