//! Exact steady-state summaries for state-independent policies.

use serde::Serialize;

use super::network::{Network, NetworkSpec, Station};
use super::normalization::normalization_log;
use crate::error::Result;
use crate::matrix::Matrix;
use crate::model::{Instance, QuantilePolicy, Units};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyStateSummary {
    pub n: usize,
    pub m: Units,
    pub stations: Vec<Station>,
    /// Visit ratios of the node queues (all queues sum to 1).
    pub w: Vec<f64>,
    pub mu: Vec<f64>,
    pub r: Vec<f64>,
    /// Sum of link-queue intensities (0 without travel times).
    pub link_load: f64,
    /// ln G_0..ln G_m (finite m only).
    #[serde(skip)]
    pub log_g: Vec<f64>,
    /// G_{m-1} / G_m.
    #[serde(rename = "G_ratio")]
    pub g_ratio: Option<f64>,
    pub availabilities: Vec<f64>,
    pub infinite_availabilities: Vec<f64>,
    /// Realized customer flows f_ij.
    pub flows: Matrix<f64>,
    /// Realized redirection flows z_ij, when redirection is present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub redirect_flows: Option<Matrix<f64>>,
    /// Contribution B_i per unit of time node i is non-empty.
    pub contributions: Vec<f64>,
    pub obj_m: Option<f64>,
    pub obj_inf: f64,
    pub elevated: f64,
}

impl SteadyStateSummary {
    pub fn max_availability(&self) -> f64 {
        self.availabilities.iter().copied().fold(0.0, f64::max)
    }
}

/// Per-node contributions B_k = sum over customers served from k of the
/// ride reward minus expected redirection cost at the destination.
fn contributions(instance: &Instance, spec: &NetworkSpec<f64>) -> Result<Vec<f64>> {
    let n = instance.n;
    let kind = instance.objective;
    let mut b = vec![0.0; n];
    for (i, j) in instance.edges() {
        let a = spec.accepted(i, j);
        if a == 0.0 {
            continue;
        }
        let ride = instance.per_ride(kind, i, j, spec.q[(i, j)])?;
        let cost: f64 = (0..n).map(|l| spec.redirect_prob(j, l)).zip(0..n).map(|(p, l)| if p > 0.0 { p * instance.cost(j, l) } else { 0.0 }).sum();
        for (k, bk) in b.iter_mut().enumerate() {
            let s = spec.serving_prob(i, k);
            if s > 0.0 {
                *bk += a * s * (ride - cost);
            }
        }
    }
    Ok(b)
}

fn flows_for(spec: &NetworkSpec<f64>, avail: &[f64]) -> (Matrix<f64>, Option<Matrix<f64>>) {
    let n = spec.n;
    let flows = Matrix::from_fn(n, n, |i, j| {
        let a = spec.accepted(i, j);
        if a == 0.0 {
            return 0.0;
        }
        (0..n).map(|k| avail[k] * spec.serving_prob(i, k)).sum::<f64>() * a
    });
    let redirect = spec.redirect.as_ref().map(|_| {
        let arrivals: Vec<f64> = (0..n).map(|j| flows.col_sum(j)).collect();
        Matrix::from_fn(n, n, |j, l| spec.redirect_prob(j, l) * arrivals[j])
    });
    (flows, redirect)
}

/// Elevated objective sum phi_ij R_ij(q_ij) minus sum c_ij z_ij.
pub fn elevated_objective(instance: &Instance, q: &Matrix<f64>, z: Option<&Matrix<f64>>) -> Result<f64> {
    let mut v = 0.0;
    for (i, j) in instance.edges() {
        v += instance.phi(i, j) * instance.reward(instance.objective, i, j, q[(i, j)])?;
    }
    if let Some(z) = z {
        for (i, j) in instance.redirect_pairs() {
            if z[(i, j)] != 0.0 {
                v -= instance.cost(i, j) * z[(i, j)];
            }
        }
    }
    Ok(v)
}

fn assemble(instance: &Instance, spec: &NetworkSpec<f64>, net: &Network<f64>, m: Units) -> Result<SteadyStateSummary> {
    let n = instance.n;
    let r = net.node_intensities().to_vec();
    let rmax = r.iter().copied().fold(0.0, f64::max);
    let inf_avail: Vec<f64> = r.iter().map(|&v| v / rmax).collect();
    let b = contributions(instance, spec)?;
    let obj_inf: f64 = inf_avail.iter().zip(&b).map(|(a, b)| a * b).sum();
    let (log_g, g_ratio, avail) = match m {
        Units::Finite(m) => {
            let norm = normalization_log(&r, net.link_load(), m as usize)?;
            let ratio = norm.ratio(m as usize);
            let avail = r.iter().map(|&v| (v * ratio).min(1.0)).collect();
            (norm.log_g, Some(ratio), avail)
        }
        Units::Infinite => (Vec::new(), None, inf_avail.clone()),
    };
    let obj_m = g_ratio.map(|_| avail.iter().zip(&b).map(|(a, b)| a * b).sum());
    let (flows, redirect_flows) = flows_for(spec, &avail);
    // Elevated value: every node available, redirections at their induced rates.
    let (full_flows, _) = flows_for(spec, &vec![1.0; n]);
    let arrivals: Vec<f64> = (0..n).map(|j| full_flows.col_sum(j)).collect();
    let mut elevated = 0.0;
    for (i, j) in instance.edges() {
        elevated += instance.phi(i, j) * instance.reward(instance.objective, i, j, spec.q[(i, j)])?;
    }
    for j in 0..n {
        for l in 0..n {
            let p = spec.redirect_prob(j, l);
            if p > 0.0 {
                elevated -= instance.cost(j, l) * p * arrivals[j];
            }
        }
    }
    Ok(SteadyStateSummary {
        n,
        m,
        stations: net.stations.clone(),
        w: net.visits[..n].to_vec(),
        mu: net.mu.clone(),
        r,
        link_load: net.link_load(),
        log_g,
        g_ratio,
        availabilities: avail,
        infinite_availabilities: inf_avail,
        flows,
        redirect_flows,
        contributions: b,
        obj_m,
        obj_inf,
        elevated,
    })
}

/// Exact analytics with `m` units (travel times included when present).
pub fn steady_state_summary(instance: &Instance, policy: &QuantilePolicy, m: Units) -> Result<SteadyStateSummary> {
    let spec = NetworkSpec::from_instance(instance, policy, true)?;
    let net = spec.build()?;
    assemble(instance, &spec, &net, m)
}

/// Infinite-unit analytics: A_i = r_i / max_j r_j.
pub fn infinite_unit_summary(instance: &Instance, policy: &QuantilePolicy) -> Result<SteadyStateSummary> {
    steady_state_summary(instance, policy, Units::Infinite)
}

/// Availabilities A_i = (G_{m-1}/G_m) r_i from a normalization table.
pub fn availabilities(r: &[f64], g: &[f64], m: usize) -> Vec<f64> {
    let ratio = g[m - 1] / g[m];
    r.iter().map(|&v| v * ratio).collect()
}
