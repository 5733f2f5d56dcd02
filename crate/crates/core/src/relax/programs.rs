//! Elevated flow relaxation programs built from an instance.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::lp::Sense;
use super::point::solve_point_pricing;
use super::separable::{
    concave_separable_maximize, Curve, LinearVar, Row, SeparableProgram, SeparableSolution, SolverConfig, SolverStats,
    Term, Var,
};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::instance::validate_or_err;
use crate::model::{Instance, RewardKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Efr,
    Supply,
    Matching,
    Multi,
    RateLimited,
    Point,
    Noprice,
    NopriceRateLimited,
}

impl Variant {
    pub const ALL: [Variant; 8] = [
        Variant::Efr,
        Variant::Supply,
        Variant::Matching,
        Variant::Multi,
        Variant::RateLimited,
        Variant::Point,
        Variant::Noprice,
        Variant::NopriceRateLimited,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Efr => "efr",
            Variant::Supply => "supply",
            Variant::Matching => "matching",
            Variant::Multi => "multi",
            Variant::RateLimited => "rate-limited",
            Variant::Point => "point",
            Variant::Noprice => "noprice",
            Variant::NopriceRateLimited => "noprice-rate-limited",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL.into_iter().find(|v| v.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Variant::ALL.iter().map(|v| v.name()).collect();
            Error::Unsupported(format!("variant {s:?} (expected one of {})", names.join(", ")))
        })
    }
}

/// Solution of an elevated flow relaxation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxSolution {
    pub variant: Variant,
    /// Relaxed quantiles on the demand support (0 elsewhere). For the
    /// no-price variants, the per-origin quantile broadcast on each row.
    pub q: Matrix<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point_q: Option<Vec<f64>>,
    /// Redirection or matching rates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<Matrix<f64>>,
    /// Exact relaxation objective at the returned point.
    pub value: f64,
    /// Certified upper bound on the relaxation optimum.
    pub upper_bound: f64,
    pub gap: f64,
    pub converged: bool,
    /// Secondary objective value (multi-objective variant).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secondary_value: Option<f64>,
    /// q (1 - eps_m) for the rate-limited variant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaled_q: Option<Matrix<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_m: Option<f64>,
    pub stats: SolverStats,
}

/// eps_m = 2 sqrt(ln m / m), clamped to at most 1.
pub fn epsilon_m(m: u64) -> Result<f64> {
    if m < 2 {
        return Err(Error::Domain(format!("eps_m needs m >= 2, got {m}")));
    }
    let m = m as f64;
    Ok((2.0 * (m.ln() / m).sqrt()).min(1.0))
}

/// Variable layout of an edge-quantile program.
struct Layout {
    edges: Vec<(usize, usize)>,
    z_pairs: Vec<(usize, usize)>,
}

fn edge_terms(instance: &Instance, kind: RewardKind, edges: &[(usize, usize)]) -> Result<Vec<Term>> {
    edges
        .iter()
        .map(|&(i, j)| {
            Ok(Term { weight: instance.phi(i, j), curve: Curve::Reward { kind, dist: *instance.dist(i, j)? }, edge: (i, j) })
        })
        .collect()
}

/// Base program: supply circulation over customer flows, demand bounding.
fn efr_program(instance: &Instance) -> Result<(SeparableProgram, Layout)> {
    validate_or_err(instance)?;
    let edges = instance.edges();
    let terms = edge_terms(instance, instance.objective, &edges)?;
    let mut rows = Vec::with_capacity(instance.n);
    for i in 0..instance.n {
        let mut coeffs = Vec::new();
        for (v, &(a, b)) in edges.iter().enumerate() {
            let phi = instance.phi(a, b);
            if b == i {
                coeffs.push((Var::Q(v), phi));
            }
            if a == i {
                coeffs.push((Var::Q(v), -phi));
            }
        }
        rows.push(Row { coeffs, sense: Sense::Eq, rhs: 0.0 });
    }
    Ok((SeparableProgram { terms, linear: Vec::new(), rows, psi: None }, Layout { edges, z_pairs: Vec::new() }))
}

fn inflow_bound(instance: &Instance, i: usize) -> f64 {
    instance.demand.col_sum(i)
}

fn finish(
    instance: &Instance,
    variant: Variant,
    layout: &Layout,
    sol: SeparableSolution,
) -> RelaxSolution {
    let n = instance.n;
    let mut q = Matrix::zeros(n, n);
    for (v, &(i, j)) in layout.edges.iter().enumerate() {
        q[(i, j)] = sol.q[v];
    }
    let z = (!layout.z_pairs.is_empty() || matches!(variant, Variant::Supply | Variant::Matching)).then(|| {
        let mut z = Matrix::zeros(n, n);
        for (k, &(i, j)) in layout.z_pairs.iter().enumerate() {
            z[(i, j)] = sol.z[k].max(0.0);
        }
        z
    });
    RelaxSolution {
        variant,
        q,
        point_q: None,
        z,
        value: sol.value,
        upper_bound: sol.upper_bound,
        gap: sol.gap,
        converged: sol.converged,
        secondary_value: sol.psi_value,
        scaled_q: None,
        epsilon_m: None,
        stats: sol.stats,
    }
}

/// Pricing-only relaxation: outputs satisfy demand circulation.
pub fn solve_efr(instance: &Instance, config: &SolverConfig) -> Result<RelaxSolution> {
    let (prog, layout) = efr_program(instance)?;
    let sol = concave_separable_maximize(&prog, config)?;
    Ok(finish(instance, Variant::Efr, &layout, sol))
}

/// Pricing plus supply redirection of units that just dropped off a
/// customer.
pub fn solve_efr_supply_redirection(instance: &Instance, config: &SolverConfig) -> Result<RelaxSolution> {
    if instance.redirect_cost.is_none() {
        return Err(Error::Precondition("supply redirection needs redirect_cost".into()));
    }
    let (mut prog, mut layout) = efr_program(instance)?;
    layout.z_pairs = instance.redirect_pairs();
    for (k, &(i, j)) in layout.z_pairs.iter().enumerate() {
        prog.linear.push(LinearVar { cost: -instance.cost(i, j), upper: inflow_bound(instance, i) });
        // Circulation: z_ij leaves i and enters j.
        prog.rows[i].coeffs.push((Var::Z(k), -1.0));
        prog.rows[j].coeffs.push((Var::Z(k), 1.0));
    }
    for i in 0..instance.n {
        let mut coeffs: Vec<(Var, f64)> =
            layout.z_pairs.iter().enumerate().filter(|(_, p)| p.0 == i).map(|(k, _)| (Var::Z(k), 1.0)).collect();
        if coeffs.is_empty() {
            continue;
        }
        for (v, &(a, b)) in layout.edges.iter().enumerate() {
            if b == i {
                coeffs.push((Var::Q(v), -instance.phi(a, b)));
            }
        }
        prog.rows.push(Row { coeffs, sense: Sense::Le, rhs: 0.0 });
    }
    let sol = concave_separable_maximize(&prog, config)?;
    Ok(finish(instance, Variant::Supply, &layout, sol))
}

/// Pricing plus demand redirection: z_ij is the rate of customers accepted
/// at i and served by a unit at neighbour j.
pub fn solve_efr_matching(instance: &Instance, config: &SolverConfig) -> Result<RelaxSolution> {
    if instance.matching_edges.is_none() {
        return Err(Error::Precondition("matching needs matching_edges".into()));
    }
    let (mut prog, mut layout) = efr_program(instance)?;
    layout.z_pairs = instance.matching_pairs();
    for (k, &(i, j)) in layout.z_pairs.iter().enumerate() {
        prog.linear.push(LinearVar { cost: 0.0, upper: inflow_bound(instance, j) });
        // The unit at j is consumed in place of one at i.
        prog.rows[i].coeffs.push((Var::Z(k), 1.0));
        prog.rows[j].coeffs.push((Var::Z(k), -1.0));
    }
    for i in 0..instance.n {
        let mut coeffs: Vec<(Var, f64)> =
            layout.z_pairs.iter().enumerate().filter(|(_, p)| p.1 == i).map(|(k, _)| (Var::Z(k), 1.0)).collect();
        if coeffs.is_empty() {
            continue;
        }
        for (v, &(a, b)) in layout.edges.iter().enumerate() {
            if b == i {
                coeffs.push((Var::Q(v), -instance.phi(a, b)));
            }
        }
        prog.rows.push(Row { coeffs, sense: Sense::Le, rhs: 0.0 });
    }
    // Only accepted customers can be matched.
    for i in 0..instance.n {
        let mut coeffs: Vec<(Var, f64)> =
            layout.z_pairs.iter().enumerate().filter(|(_, p)| p.0 == i).map(|(k, _)| (Var::Z(k), 1.0)).collect();
        if coeffs.is_empty() {
            continue;
        }
        for (v, &(a, b)) in layout.edges.iter().enumerate() {
            if a == i {
                coeffs.push((Var::Q(v), -instance.phi(a, b)));
            }
        }
        prog.rows.push(Row { coeffs, sense: Sense::Le, rhs: 0.0 });
    }
    let sol = concave_separable_maximize(&prog, config)?;
    Ok(finish(instance, Variant::Matching, &layout, sol))
}

/// Primary objective subject to the secondary elevated objective >= c.
pub fn solve_efr_multiobjective(instance: &Instance, config: &SolverConfig) -> Result<RelaxSolution> {
    let mo = instance
        .multi_objective
        .ok_or_else(|| Error::Precondition("multi-objective variant needs multi_objective".into()))?;
    let (mut prog, layout) = efr_program(instance)?;
    let psi_terms = edge_terms(instance, mo.kind, &layout.edges)?;
    // Largest attainable secondary value.
    let mut psi_prog = prog.clone();
    psi_prog.terms = psi_terms.clone();
    let psi_max = concave_separable_maximize(&psi_prog, config)?;
    let c = mo.requirement;
    let psi_row = prog.rows.len();
    if c > psi_max.upper_bound * (1.0 + 1e-12) + 1e-12 || c > psi_max.value {
        return Err(Error::Infeasible { rows: vec![psi_row] });
    }
    // A tiny margin keeps the exact secondary value at or above c despite
    // LP round-off.
    let margin = 1e-10 * c.abs().max(1.0);
    let attempts = if c + margin <= psi_max.value { vec![c + margin, c] } else { vec![c] };
    let mut last_err = None;
    for rhs in attempts {
        prog.psi = Some((psi_terms.clone(), rhs));
        match concave_separable_maximize(&prog, config) {
            Ok(sol) => return Ok(finish(instance, Variant::Multi, &layout, sol)),
            Err(e @ Error::Infeasible { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.map_or(Error::Infeasible { rows: vec![psi_row] }, |_| Error::Infeasible { rows: vec![psi_row] }))
}

/// Pricing with travel times: sum phi tau q <= m, then scale by (1 - eps_m).
pub fn solve_efr_rate_limited(instance: &Instance, config: &SolverConfig) -> Result<RelaxSolution> {
    let tau = instance.travel_time.as_ref().ok_or_else(|| Error::Precondition("rate limit needs travel_time".into()))?;
    let m = instance.units()?;
    let eps = epsilon_m(m)?;
    let (mut prog, layout) = efr_program(instance)?;
    let coeffs: Vec<(Var, f64)> = layout
        .edges
        .iter()
        .enumerate()
        .filter(|(_, &(i, j))| tau[(i, j)] > 0.0)
        .map(|(v, &(i, j))| (Var::Q(v), instance.phi(i, j) * tau[(i, j)]))
        .collect();
    if !coeffs.is_empty() {
        prog.rows.push(Row { coeffs, sense: Sense::Le, rhs: m as f64 });
    }
    let sol = concave_separable_maximize(&prog, config)?;
    let mut out = finish(instance, Variant::RateLimited, &layout, sol);
    out.scaled_q = Some(out.q.map(|v| v * (1.0 - eps)));
    out.epsilon_m = Some(eps);
    Ok(out)
}

/// Constant per-ride reward used without prices: the reward at q = 1.
fn noprice_reward(instance: &Instance, i: usize, j: usize) -> Result<f64> {
    instance.per_ride(instance.objective, i, j, 1.0)
}

fn noprice_program(instance: &Instance, rate_limit: bool) -> Result<(SeparableProgram, Vec<(usize, usize)>)> {
    validate_or_err(instance)?;
    if instance.redirect_cost.is_none() {
        return Err(Error::Precondition("redirection without prices needs redirect_cost".into()));
    }
    let n = instance.n;
    let mut terms = Vec::with_capacity(n);
    for i in 0..n {
        let mut slope = 0.0;
        for j in 0..n {
            if instance.phi(i, j) > 0.0 {
                slope += instance.phi(i, j) * noprice_reward(instance, i, j)?;
            }
        }
        terms.push(Term { weight: 1.0, curve: Curve::Linear { slope }, edge: (i, i) });
    }
    let pairs = instance.redirect_pairs();
    let linear: Vec<LinearVar> =
        pairs.iter().map(|&(i, j)| LinearVar { cost: -instance.cost(i, j), upper: inflow_bound(instance, i) }).collect();
    let mut rows = Vec::new();
    for i in 0..n {
        let mut coeffs = Vec::new();
        for k in 0..n {
            if instance.phi(k, i) > 0.0 {
                coeffs.push((Var::Q(k), instance.phi(k, i)));
            }
        }
        let out: f64 = instance.out_rates()[i];
        if out > 0.0 {
            coeffs.push((Var::Q(i), -out));
        }
        for (k, &(a, b)) in pairs.iter().enumerate() {
            if b == i {
                coeffs.push((Var::Z(k), 1.0));
            }
            if a == i {
                coeffs.push((Var::Z(k), -1.0));
            }
        }
        rows.push(Row { coeffs, sense: Sense::Eq, rhs: 0.0 });
    }
    for i in 0..n {
        let mut coeffs: Vec<(Var, f64)> =
            pairs.iter().enumerate().filter(|(_, p)| p.0 == i).map(|(k, _)| (Var::Z(k), 1.0)).collect();
        if coeffs.is_empty() {
            continue;
        }
        for j in 0..n {
            if instance.phi(j, i) > 0.0 {
                coeffs.push((Var::Q(j), -instance.phi(j, i)));
            }
        }
        rows.push(Row { coeffs, sense: Sense::Le, rhs: 0.0 });
    }
    if rate_limit {
        let m = instance.units()?;
        let tau = instance.travel_time.as_ref().ok_or_else(|| Error::Precondition("rate limit needs travel_time".into()))?;
        let mut coeffs = Vec::new();
        for i in 0..n {
            let load: f64 = (0..n).map(|j| instance.phi(i, j) * tau[(i, j)]).sum();
            if load > 0.0 {
                coeffs.push((Var::Q(i), load));
            }
        }
        // Units in transit while redirected: rate times mean travel time.
        for (k, &(a, b)) in pairs.iter().enumerate() {
            if tau[(a, b)] > 0.0 {
                coeffs.push((Var::Z(k), tau[(a, b)]));
            }
        }
        rows.push(Row { coeffs, sense: Sense::Le, rhs: m as f64 });
    }
    Ok((SeparableProgram { terms, linear, rows, psi: None }, pairs))
}

fn finish_noprice(instance: &Instance, variant: Variant, pairs: &[(usize, usize)], sol: SeparableSolution) -> RelaxSolution {
    let n = instance.n;
    let q = Matrix::from_fn(n, n, |i, j| if instance.phi(i, j) > 0.0 { sol.q[i] } else { 0.0 });
    let mut z = Matrix::zeros(n, n);
    for (k, &(i, j)) in pairs.iter().enumerate() {
        z[(i, j)] = sol.z[k].max(0.0);
    }
    RelaxSolution {
        variant,
        q,
        point_q: Some(sol.q.clone()),
        z: Some(z),
        value: sol.value,
        upper_bound: sol.upper_bound,
        gap: sol.gap,
        converged: sol.converged,
        secondary_value: None,
        scaled_q: None,
        epsilon_m: None,
        stats: sol.stats,
    }
}

/// Redirection without prices: per-origin service fractions and
/// redirection rates, a pure LP.
pub fn solve_noprice_redirection(instance: &Instance, config: &SolverConfig) -> Result<RelaxSolution> {
    let (prog, pairs) = noprice_program(instance, false)?;
    let sol = concave_separable_maximize(&prog, config)?;
    Ok(finish_noprice(instance, Variant::Noprice, &pairs, sol))
}

/// Redirection without prices under the travel-time rate limit.
pub fn solve_noprice_rate_limited(instance: &Instance, config: &SolverConfig) -> Result<RelaxSolution> {
    let (prog, pairs) = noprice_program(instance, true)?;
    let sol = concave_separable_maximize(&prog, config)?;
    Ok(finish_noprice(instance, Variant::NopriceRateLimited, &pairs, sol))
}

pub fn solve(instance: &Instance, variant: Variant, config: &SolverConfig) -> Result<RelaxSolution> {
    match variant {
        Variant::Efr => solve_efr(instance, config),
        Variant::Supply => solve_efr_supply_redirection(instance, config),
        Variant::Matching => solve_efr_matching(instance, config),
        Variant::Multi => solve_efr_multiobjective(instance, config),
        Variant::RateLimited => solve_efr_rate_limited(instance, config),
        Variant::Point => solve_point_pricing(instance, config),
        Variant::Noprice => solve_noprice_redirection(instance, config),
        Variant::NopriceRateLimited => solve_noprice_rate_limited(instance, config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
            assert_eq!(serde_json::to_string(&v).unwrap(), format!("\"{}\"", v.name()));
        }
    }

    #[test]
    fn epsilon_values() {
        assert!((epsilon_m(100).unwrap() - 0.429_193_0).abs() < 1e-6);
        assert_eq!(epsilon_m(3).unwrap(), 1.0);
        assert!(epsilon_m(1).is_err());
    }
}
