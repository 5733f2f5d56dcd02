//! Point pricing: one price per origin, reduced to a single variable.

use super::programs::{RelaxSolution, Variant};
use super::separable::{SolverConfig, SolverStats};
use crate::error::{Error, Result};
use crate::gordon_newell::gth;
use crate::matrix::Matrix;
use crate::model::instance::validate_or_err;
use crate::model::{marginal_reward, reward_curve, Instance, ValueDistribution};

/// The common value distribution of each origin's outgoing demand.
pub fn origin_distributions(instance: &Instance) -> Result<Vec<ValueDistribution>> {
    let mut out = Vec::with_capacity(instance.n);
    for i in 0..instance.n {
        let mut dist: Option<ValueDistribution> = None;
        for j in 0..instance.n {
            if instance.phi(i, j) > 0.0 {
                let d = *instance.dist(i, j)?;
                match dist {
                    None => dist = Some(d),
                    Some(prev) if prev != d => {
                        return Err(Error::Precondition(format!("station {i} has different value distributions across destinations")))
                    }
                    _ => {}
                }
            }
        }
        out.push(dist.ok_or_else(|| Error::Precondition(format!("station {i} has no outgoing demand")))?);
    }
    Ok(out)
}

/// Golden-section search for the maximum of a unimodal `f` on [a, b].
/// Returns the final bracket.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, width: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > width {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        if c >= d {
            break;
        }
    }
    (a, b)
}

/// Demand circulation with per-origin quantiles forces q_i proportional to
/// w_i / Phi_i, where w is invariant for phi_ij / Phi_i; the scale t is the
/// only free variable.
pub fn solve_point_pricing(instance: &Instance, config: &SolverConfig) -> Result<RelaxSolution> {
    config.check()?;
    validate_or_err(instance)?;
    let n = instance.n;
    let dists = origin_distributions(instance)?;
    let out = instance.out_rates();
    let routing = Matrix::from_fn(n, n, |i, j| instance.phi(i, j) / out[i]);
    let w = gth(&routing)?;
    let a: Vec<f64> = (0..n).map(|i| w[i] / out[i]).collect();
    let (imax, _) = a.iter().enumerate().fold((0, 0.0), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
    let t_max = 1.0 / a[imax];
    let kind = instance.objective;
    let quantiles = |t: f64| -> Vec<f64> {
        (0..n).map(|i| if i == imax && t >= t_max { 1.0 } else { (t * a[i]).clamp(0.0, 1.0) }).collect()
    };
    let g = |t: f64| -> f64 {
        quantiles(t).iter().enumerate().map(|(i, &q)| out[i] * reward_curve(kind, &dists[i], q).expect("q in [0, 1]")).sum()
    };
    let dg = |t: f64| -> f64 {
        let q = quantiles(t);
        (0..n).map(|i| out[i] * a[i] * marginal_reward(kind, &dists[i], q[i])).sum()
    };
    let width = 1e-10 * t_max.max(1.0);
    let (lo, hi, t_best) = if dg(t_max) >= 0.0 {
        (t_max, t_max, t_max)
    } else {
        let (lo, hi) = golden_section(g, 0.0, t_max, width);
        let t = if g(lo) >= g(hi) { lo } else { hi };
        (lo, hi, t)
    };
    let value = g(t_best);
    let mut ub = value;
    if hi > lo {
        let mut bound = f64::INFINITY;
        let dl = dg(lo);
        if dl.is_finite() {
            bound = bound.min(g(lo) + dl.max(0.0) * (hi - lo));
        }
        let dh = dg(hi);
        if dh.is_finite() {
            bound = bound.min(g(hi) + (-dh).max(0.0) * (hi - lo));
        }
        if bound.is_finite() {
            ub = bound.max(value);
        }
    }
    let point_q = quantiles(t_best);
    let q = Matrix::from_fn(n, n, |i, j| if instance.phi(i, j) > 0.0 { point_q[i] } else { 0.0 });
    let gap = ub - value;
    Ok(RelaxSolution {
        variant: Variant::Point,
        q,
        point_q: Some(point_q),
        z: None,
        value,
        upper_bound: ub,
        gap,
        converged: gap <= config.gap_tolerance * ub.abs().max(1.0),
        secondary_value: None,
        scaled_q: None,
        epsilon_m: None,
        stats: SolverStats { rounds: 1, pivots: 0, max_breakpoints: 0 },
    })
}
