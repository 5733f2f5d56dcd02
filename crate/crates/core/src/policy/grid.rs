//! Rounding point prices up to a discrete price grid.

use serde::{Deserialize, Serialize};

use super::ext_real;
use crate::error::{Error, Result};
use crate::model::{price_to_quantile, Instance};
use crate::relax::origin_distributions;

/// Relative slack when comparing a solved price with grid prices.
const PRICE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteGridReport {
    #[serde(with = "ext_real::vec")]
    pub solved_prices: Vec<f64>,
    pub rounded_prices: Vec<f64>,
    pub solved_quantiles: Vec<f64>,
    pub rounded_quantiles: Vec<f64>,
    /// Solved minus rounded quantile per station.
    pub slack: Vec<f64>,
    /// Largest ratio of consecutive grid quantiles (infinite if a grid
    /// price sells to nobody).
    #[serde(with = "ext_real::scalar")]
    pub rho: f64,
    /// Whether each station has a grid price at or above its solved price.
    pub covered: Vec<bool>,
    pub condition_met: bool,
    /// m / (m + n - 1) / rho, when the fleet is finite.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guarantee: Option<f64>,
}

pub fn round_to_discrete_grid(instance: &Instance, point_prices: &[f64]) -> Result<DiscreteGridReport> {
    let n = instance.n;
    let grid = instance.price_grid.as_ref().ok_or_else(|| Error::Precondition("instance has no price_grid".into()))?;
    if grid.len() != n || point_prices.len() != n {
        return Err(Error::Precondition(format!("need {n} grids and {n} prices")));
    }
    let dists = origin_distributions(instance)?;
    let mut report = DiscreteGridReport {
        solved_prices: point_prices.to_vec(),
        rounded_prices: Vec::with_capacity(n),
        solved_quantiles: Vec::with_capacity(n),
        rounded_quantiles: Vec::with_capacity(n),
        slack: Vec::with_capacity(n),
        rho: 1.0,
        covered: Vec::with_capacity(n),
        condition_met: true,
        guarantee: None,
    };
    for i in 0..n {
        let g = &grid[i];
        if g.is_empty() {
            return Err(Error::Precondition(format!("station {i} has an empty price grid")));
        }
        if g.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Precondition(format!("price grid at station {i} is not strictly ascending")));
        }
        let gq = g.iter().map(|&p| price_to_quantile(&dists[i], p)).collect::<Result<Vec<_>>>()?;
        if gq.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(Error::Precondition(format!(
                "price grid at station {i} does not map to strictly decreasing quantiles"
            )));
        }
        for w in gq.windows(2) {
            report.rho = report.rho.max(if w[1] > 0.0 { w[0] / w[1] } else { f64::INFINITY });
        }
        let p = point_prices[i];
        let qi = price_to_quantile(&dists[i], p)?;
        let tol = PRICE_TOL * p.abs().max(1.0);
        let (k, covered) = match g.iter().position(|&gp| gp >= p - tol) {
            Some(k) => (k, true),
            None => (g.len() - 1, false),
        };
        report.covered.push(covered);
        report.condition_met &= covered;
        report.rounded_prices.push(g[k]);
        report.solved_quantiles.push(qi);
        report.rounded_quantiles.push(gq[k]);
        report.slack.push(qi - gq[k]);
    }
    if let Some(m) = instance.m.finite() {
        let gamma = m as f64 / (m as f64 + n as f64 - 1.0);
        report.guarantee = Some(gamma / report.rho);
    }
    Ok(report)
}
