use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::distribution::ValueDistribution;
use super::reward::{per_ride_reward, reward_curve, RewardKind};
use crate::error::{Diagnostic, DiagnosticCode, Error, Result};
use crate::graph;
use crate::matrix::Matrix;

/// Fleet size: a finite number of units or the infinite-unit limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Units {
    Finite(u64),
    Infinite,
}

impl Units {
    pub fn finite(self) -> Option<u64> {
        match self {
            Units::Finite(m) => Some(m),
            Units::Infinite => None,
        }
    }
}

impl fmt::Display for Units {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Units::Finite(m) => write!(f, "{m}"),
            Units::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Units {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Units::Finite(m) => s.serialize_u64(*m),
            Units::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Units {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(m) => Ok(Units::Finite(m)),
            Raw::Str(s) if s == "inf" => Ok(Units::Infinite),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("expected integer or \"inf\", got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiObjective {
    pub kind: RewardKind,
    pub requirement: f64,
}

/// A shared-vehicle system: stations, fleet size, demand and optional
/// control levers.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub n: usize,
    pub m: Units,
    pub objective: RewardKind,
    /// Arrival rates phi_ij.
    pub demand: Matrix<f64>,
    pub value_dist: Matrix<Option<ValueDistribution>>,
    pub travel_time: Option<Matrix<f64>>,
    /// Redirection costs; `f64::INFINITY` marks a disallowed pair.
    pub redirect_cost: Option<Matrix<f64>>,
    /// Undirected matching graph.
    pub matching_edges: Option<Vec<(usize, usize)>>,
    /// Ascending prices available at each station.
    pub price_grid: Option<Vec<Vec<f64>>>,
    pub multi_objective: Option<MultiObjective>,
}

impl Instance {
    /// Instance with demand and distributions only.
    pub fn new(m: Units, objective: RewardKind, demand: Matrix<f64>, value_dist: Matrix<Option<ValueDistribution>>) -> Self {
        Instance {
            n: demand.rows(),
            m,
            objective,
            demand,
            value_dist,
            travel_time: None,
            redirect_cost: None,
            matching_edges: None,
            price_grid: None,
            multi_objective: None,
        }
    }

    /// Same distribution on every positive-demand pair.
    pub fn uniform_dist(m: Units, objective: RewardKind, demand: Matrix<f64>, dist: ValueDistribution) -> Self {
        let vd = demand.map(|phi| (phi > 0.0).then_some(dist));
        Self::new(m, objective, demand, vd)
    }

    pub fn phi(&self, i: usize, j: usize) -> f64 {
        self.demand[(i, j)]
    }

    /// Demand support in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if self.demand[(i, j)] > 0.0 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn dist(&self, i: usize, j: usize) -> Result<&ValueDistribution> {
        self.value_dist[(i, j)]
            .as_ref()
            .ok_or_else(|| Error::Precondition(format!("no value distribution on ({i},{j})")))
    }

    pub fn units(&self) -> Result<u64> {
        self.m.finite().ok_or_else(|| Error::Precondition("finite unit count required".into()))
    }

    pub fn reward(&self, kind: RewardKind, i: usize, j: usize, q: f64) -> Result<f64> {
        reward_curve(kind, self.dist(i, j)?, q)
    }

    pub fn per_ride(&self, kind: RewardKind, i: usize, j: usize, q: f64) -> Result<f64> {
        per_ride_reward(kind, self.dist(i, j)?, q)
    }

    pub fn tau(&self, i: usize, j: usize) -> f64 {
        self.travel_time.as_ref().map_or(0.0, |t| t[(i, j)])
    }

    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.redirect_cost.as_ref().map_or(f64::INFINITY, |c| c[(i, j)])
    }

    /// Pairs (i, j), i != j, where supply redirection is allowed.
    pub fn redirect_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        if let Some(c) = &self.redirect_cost {
            for i in 0..self.n {
                for j in 0..self.n {
                    if i != j && c[(i, j)].is_finite() {
                        out.push((i, j));
                    }
                }
            }
        }
        out
    }

    /// Ordered pairs (i, j) with {i, j} in the matching graph.
    pub fn matching_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        if let Some(edges) = &self.matching_edges {
            for &(a, b) in edges {
                if a != b {
                    out.push((a, b));
                    out.push((b, a));
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Total arrival rate out of each station.
    pub fn out_rates(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.demand.row_sum(i)).collect()
    }

    pub fn validate(&self) -> std::result::Result<(), Vec<Diagnostic>> {
        let d = validate_diagnostics(self);
        if d.is_empty() {
            Ok(())
        } else {
            Err(d)
        }
    }
}

/// Checks every instance invariant and returns the instance unchanged when
/// none is violated.
pub fn validate_instance(instance: Instance) -> std::result::Result<Instance, Vec<Diagnostic>> {
    instance.validate().map(|_| instance)
}

pub(crate) fn validate_or_err(instance: &Instance) -> Result<()> {
    instance.validate().map_err(Error::InvalidInstance)
}

fn square(m: &Matrix<impl Copy>, n: usize) -> bool {
    m.rows() == n && m.cols() == n
}

fn validate_diagnostics(inst: &Instance) -> Vec<Diagnostic> {
    use DiagnosticCode::*;
    let n = inst.n;
    let mut out = Vec::new();
    if n == 0 {
        out.push(Diagnostic::new("/n", Dimension, "at least one station is required"));
        return out;
    }
    if !square(&inst.demand, n) {
        out.push(Diagnostic::new("/demand", Dimension, format!("demand must be {n}x{n}")));
        return out;
    }
    if !square(&inst.value_dist, n) {
        out.push(Diagnostic::new("/demand", Dimension, format!("distribution matrix must be {n}x{n}")));
        return out;
    }
    if inst.m == Units::Finite(0) {
        out.push(Diagnostic::new("/m", InvalidUnits, "unit count must be positive"));
    }
    let mut any_positive = false;
    for i in 0..n {
        for j in 0..n {
            let phi = inst.demand[(i, j)];
            let ptr = format!("/demand/{i}/{j}");
            if !phi.is_finite() || phi < 0.0 {
                out.push(Diagnostic::new(ptr.clone(), NegativeRate, format!("rate {phi} must be finite and >= 0")));
                continue;
            }
            if phi > 0.0 {
                any_positive = true;
                if i == j {
                    out.push(Diagnostic::new(ptr.clone(), SelfLoopDemand, format!("station {i} has demand to itself")));
                }
                match &inst.value_dist[(i, j)] {
                    None => out.push(Diagnostic::new(ptr, MissingDistribution, "positive rate needs a distribution")),
                    Some(d) => {
                        if let Err(e) = d.check() {
                            out.push(Diagnostic::new(ptr, InvalidDistribution, e.to_string()));
                        }
                    }
                }
            }
        }
    }
    if !any_positive {
        out.push(Diagnostic::new("/demand", NoDemand, "all arrival rates are zero"));
    } else if !graph::is_strongly_connected(n, |a, b| a != b && inst.demand[(a, b)] > 0.0) {
        out.push(Diagnostic::new("/demand", NotStronglyConnected, "positive-demand edges do not form one strongly connected component"));
    }
    if let Some(t) = &inst.travel_time {
        if !square(t, n) {
            out.push(Diagnostic::new("/travel_time", Dimension, format!("must be {n}x{n}")));
        } else {
            for i in 0..n {
                for j in 0..n {
                    let v = t[(i, j)];
                    if !v.is_finite() || v < 0.0 {
                        out.push(Diagnostic::new(format!("/travel_time/{i}/{j}"), InvalidTravelTime, format!("{v} must be finite and >= 0")));
                    }
                }
            }
        }
    }
    if let Some(c) = &inst.redirect_cost {
        if !square(c, n) {
            out.push(Diagnostic::new("/redirect_cost", Dimension, format!("must be {n}x{n}")));
        } else {
            for i in 0..n {
                for j in 0..n {
                    let v = c[(i, j)];
                    if v.is_nan() || v < 0.0 {
                        out.push(Diagnostic::new(format!("/redirect_cost/{i}/{j}"), InvalidRedirectCost, format!("{v} must be >= 0")));
                    }
                }
            }
        }
    }
    if let Some(edges) = &inst.matching_edges {
        for (k, &(a, b)) in edges.iter().enumerate() {
            if a >= n || b >= n {
                out.push(Diagnostic::new(format!("/matching_edges/{k}"), IndexOutOfRange, format!("({a},{b}) outside 0..{n}")));
            } else if a == b {
                out.push(Diagnostic::new(format!("/matching_edges/{k}"), InvalidMatchingEdge, "matching edge joins a station to itself"));
            }
        }
    }
    if let Some(grid) = &inst.price_grid {
        if grid.len() != n {
            out.push(Diagnostic::new("/price_grid", Dimension, format!("need one price list per station ({n})")));
        } else {
            for (i, prices) in grid.iter().enumerate() {
                if prices.is_empty() {
                    out.push(Diagnostic::new(format!("/price_grid/{i}"), InvalidPriceGrid, "empty price list"));
                } else if prices.iter().any(|p| !p.is_finite()) || prices.windows(2).any(|w| w[0] >= w[1]) {
                    out.push(Diagnostic::new(format!("/price_grid/{i}"), InvalidPriceGrid, "prices must be finite and strictly ascending"));
                }
            }
        }
    }
    if let Some(mo) = &inst.multi_objective {
        if !(mo.requirement.is_finite() && mo.requirement >= 0.0) {
            out.push(Diagnostic::new("/multi_objective/requirement", InvalidRequirement, format!("{} must be finite and >= 0", mo.requirement)));
        }
    }
    out
}

/// State-independent controls: quantiles plus optional redirection and
/// matching probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantilePolicy {
    pub q: Matrix<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub redirect: Option<Matrix<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matching: Option<Matrix<f64>>,
}

impl QuantilePolicy {
    pub fn new(q: Matrix<f64>) -> Self {
        QuantilePolicy { q, redirect: None, matching: None }
    }

    /// q = `value` on the demand support and 0 elsewhere.
    pub fn constant(instance: &Instance, value: f64) -> Self {
        Self::new(instance.demand.map(|phi| if phi > 0.0 { value } else { 0.0 }))
    }

    /// Per-origin quantiles broadcast over each origin's outgoing edges.
    pub fn from_point(instance: &Instance, q: &[f64]) -> Self {
        Self::new(Matrix::from_fn(instance.n, instance.n, |i, j| if instance.phi(i, j) > 0.0 { q[i] } else { 0.0 }))
    }

    pub fn with_redirect(mut self, r: Matrix<f64>) -> Self {
        self.redirect = Some(r);
        self
    }

    pub fn with_matching(mut self, mu: Matrix<f64>) -> Self {
        self.matching = Some(mu);
        self
    }

    pub fn check(&self, instance: &Instance) -> Result<()> {
        let n = instance.n;
        let tol = 1e-9;
        if self.q.rows() != n || self.q.cols() != n {
            return Err(Error::Precondition(format!("quantile matrix must be {n}x{n}")));
        }
        for (i, j) in instance.edges() {
            let q = self.q[(i, j)];
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::Domain(format!("quantile q[{i}][{j}] = {q} outside [0, 1]")));
            }
        }
        for (name, m) in [("redirect", &self.redirect), ("matching", &self.matching)] {
            if let Some(m) = m {
                if m.rows() != n || m.cols() != n {
                    return Err(Error::Precondition(format!("{name} matrix must be {n}x{n}")));
                }
                for i in 0..n {
                    let mut s = 0.0;
                    for j in 0..n {
                        let v = m[(i, j)];
                        if !(v >= 0.0 && v <= 1.0 + tol) {
                            return Err(Error::Domain(format!("{name}[{i}][{j}] = {v} outside [0, 1]")));
                        }
                        if i != j {
                            s += v;
                        }
                    }
                    if s > 1.0 + tol {
                        return Err(Error::Domain(format!("{name} row {i} sums to {s} > 1")));
                    }
                }
            }
        }
        if let Some(r) = &self.redirect {
            for (i, j) in (0..n).flat_map(|i| (0..n).map(move |j| (i, j))) {
                if i != j && r[(i, j)] > 0.0 && !instance.cost(i, j).is_finite() {
                    return Err(Error::Precondition(format!("redirection {i}->{j} is not allowed")));
                }
            }
        }
        if let Some(mu) = &self.matching {
            let pairs = instance.matching_pairs();
            for i in 0..n {
                for j in 0..n {
                    if i != j && mu[(i, j)] > 0.0 && pairs.binary_search(&(i, j)).is_err() {
                        return Err(Error::Precondition(format!("matching {i}->{j} is not an edge of the matching graph")));
                    }
                }
            }
        }
        Ok(())
    }
}
