//! Composite routing over node queues and (with travel times) link queues.

use serde::{Deserialize, Serialize};

use super::invariant::gth;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{Instance, QuantilePolicy};
use crate::scalar::Scalar;

/// A queue of the closed network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Station {
    /// Single-server station: units parked at a node.
    Node(usize),
    /// Infinite-server station: units carrying customers from i to j.
    Ride(usize, usize),
    /// Infinite-server station: empty units redirected from i to j.
    Reposition(usize, usize),
}

impl Station {
    pub fn is_node(self) -> bool {
        matches!(self, Station::Node(_))
    }
}

/// Rates and controls that determine the unit dynamics, in any scalar type.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec<T> {
    pub n: usize,
    pub phi: Matrix<T>,
    pub q: Matrix<T>,
    /// r_ij: probability a unit finishing a ride at i is sent on to j.
    pub redirect: Option<Matrix<T>>,
    /// mu_ik: probability a customer accepted at i is served by a unit at k.
    pub matching: Option<Matrix<T>>,
    pub tau: Option<Matrix<T>>,
}

impl NetworkSpec<f64> {
    pub fn from_instance(instance: &Instance, policy: &QuantilePolicy, with_delays: bool) -> Result<Self> {
        policy.check(instance)?;
        let n = instance.n;
        let q = Matrix::from_fn(n, n, |i, j| if instance.phi(i, j) > 0.0 { policy.q[(i, j)] } else { 0.0 });
        Ok(NetworkSpec {
            n,
            phi: instance.demand.clone(),
            q,
            redirect: policy.redirect.clone(),
            matching: policy.matching.clone(),
            tau: if with_delays { instance.travel_time.clone() } else { None },
        })
    }
}

impl<T: Scalar> NetworkSpec<T> {
    pub fn plain(phi: Matrix<T>, q: Matrix<T>) -> Self {
        NetworkSpec { n: phi.rows(), phi, q, redirect: None, matching: None, tau: None }
    }

    pub fn cast<U: Scalar>(&self, f: impl Fn(T) -> U + Copy) -> NetworkSpec<U> {
        NetworkSpec {
            n: self.n,
            phi: self.phi.map(f),
            q: self.q.map(f),
            redirect: self.redirect.as_ref().map(|m| m.map(f)),
            matching: self.matching.as_ref().map(|m| m.map(f)),
            tau: self.tau.as_ref().map(|m| m.map(f)),
        }
    }

    /// Accepted customer rate phi_ij q_ij.
    pub fn accepted(&self, i: usize, j: usize) -> T {
        if i == j {
            T::zero()
        } else {
            self.phi[(i, j)] * self.q[(i, j)]
        }
    }

    /// Probability that a customer accepted at i is served by a unit at k,
    /// with the residual mass on k = i.
    pub fn serving_prob(&self, i: usize, k: usize) -> T {
        match &self.matching {
            None => {
                if i == k {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Some(mu) => {
                if i == k {
                    let off = (0..self.n).filter(|&l| l != i).fold(T::zero(), |a, l| a + mu[(i, l)]);
                    T::one() - off
                } else {
                    mu[(i, k)]
                }
            }
        }
    }

    pub fn redirect_prob(&self, j: usize, l: usize) -> T {
        match &self.redirect {
            Some(r) if j != l => r[(j, l)],
            _ => T::zero(),
        }
    }

    pub fn tau(&self, i: usize, j: usize) -> T {
        self.tau.as_ref().map_or(T::zero(), |t| t[(i, j)])
    }

    /// Rate at which a unit parked at k departs towards destination j (per
    /// unit of time the node is non-empty).
    pub fn departure_rates(&self) -> Matrix<T> {
        let n = self.n;
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let a = self.accepted(i, j);
                if a == T::zero() {
                    continue;
                }
                for k in 0..n {
                    let s = self.serving_prob(i, k);
                    if s != T::zero() {
                        out[(k, j)] = out[(k, j)] + a * s;
                    }
                }
            }
        }
        out
    }

    /// Routes the unit dynamics into a closed network and solves for the
    /// visit ratios.
    pub fn build(&self) -> Result<Network<T>> {
        let n = self.n;
        if self.matching.is_some() && self.tau.is_some() {
            return Err(Error::Unsupported("matching combined with travel times".into()));
        }
        let dep = self.departure_rates();
        let mu: Vec<T> = (0..n).map(|k| dep.row_sum(k)).collect();
        if let Some(k) = mu.iter().position(|&v| v <= T::zero()) {
            return Err(Error::DeadNode { node: k });
        }
        let mut stations: Vec<Station> = (0..n).map(Station::Node).collect();
        for k in 0..n {
            for j in 0..n {
                if k != j && dep[(k, j)] > T::zero() && self.tau(k, j) > T::zero() {
                    stations.push(Station::Ride(k, j));
                }
            }
        }
        let receives: Vec<bool> = (0..n).map(|j| (0..n).any(|k| dep[(k, j)] > T::zero())).collect();
        for j in 0..n {
            for l in 0..n {
                if receives[j] && self.redirect_prob(j, l) > T::zero() && self.tau(j, l) > T::zero() {
                    stations.push(Station::Reposition(j, l));
                }
            }
        }
        let index = |s: Station| stations.iter().position(|&t| t == s);
        let s_count = stations.len();
        let mut routing = Matrix::zeros(s_count, s_count);
        // Where a unit goes after completing a ride into j.
        let arrival = |j: usize| -> Vec<(usize, T)> {
            let mut out = Vec::new();
            let mut stay = T::one();
            for l in 0..n {
                let p = self.redirect_prob(j, l);
                if p > T::zero() {
                    stay = stay - p;
                    let target = index(Station::Reposition(j, l)).unwrap_or(l);
                    out.push((target, p));
                }
            }
            if stay > T::zero() {
                out.push((j, stay));
            }
            out
        };
        for (s, &st) in stations.iter().enumerate() {
            match st {
                Station::Node(k) => {
                    for j in 0..n {
                        let d = dep[(k, j)];
                        if d == T::zero() {
                            continue;
                        }
                        let p = d / mu[k];
                        match index(Station::Ride(k, j)) {
                            Some(t) => routing[(s, t)] = routing[(s, t)] + p,
                            None => {
                                for (t, pa) in arrival(j) {
                                    routing[(s, t)] = routing[(s, t)] + p * pa;
                                }
                            }
                        }
                    }
                }
                Station::Ride(_, j) => {
                    for (t, pa) in arrival(j) {
                        routing[(s, t)] = routing[(s, t)] + pa;
                    }
                }
                Station::Reposition(_, l) => routing[(s, l)] = T::one(),
            }
        }
        let visits = gth(&routing).map_err(|e| match e {
            Error::Reducible { closed } => Error::Reducible {
                closed: closed
                    .into_iter()
                    .filter_map(|s| match stations[s] {
                        Station::Node(i) => Some(i),
                        _ => None,
                    })
                    .collect(),
            },
            other => other,
        })?;
        let intensity: Vec<T> = stations
            .iter()
            .zip(&visits)
            .map(|(&st, &w)| match st {
                Station::Node(k) => w / mu[k],
                Station::Ride(i, j) | Station::Reposition(i, j) => w * self.tau(i, j),
            })
            .collect();
        Ok(Network { n, stations, mu, departures: dep, routing, visits, intensity })
    }
}

/// Closed network of node and link queues with solved visit ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    pub n: usize,
    /// Nodes first (in index order), then ride links, then reposition links.
    pub stations: Vec<Station>,
    /// Effective service rate of each node.
    pub mu: Vec<T>,
    pub departures: Matrix<T>,
    pub routing: Matrix<T>,
    /// Visit ratios over all stations, summing to 1.
    pub visits: Vec<T>,
    /// Node r_i = w_i / mu_i; link w_l tau_l.
    pub intensity: Vec<T>,
}

impl<T: Scalar> Network<T> {
    pub fn node_intensities(&self) -> &[T] {
        &self.intensity[..self.n]
    }

    pub fn link_load(&self) -> T {
        self.intensity[self.n..].iter().fold(T::zero(), |a, &b| a + b)
    }

    pub fn has_links(&self) -> bool {
        self.stations.len() > self.n
    }
}

/// Routing matrix lambda_ij = phi_ij q_ij / sum_k phi_ik q_ik (composite
/// over link queues when the policy has travel times or redirection).
pub fn routing_matrix(instance: &Instance, policy: &QuantilePolicy) -> Result<(Vec<Station>, Matrix<f64>)> {
    let net = NetworkSpec::from_instance(instance, policy, true)?.build()?;
    Ok((net.stations, net.routing))
}

/// r_i = w_i / mu_i over the node queues.
pub fn traffic_intensities(instance: &Instance, policy: &QuantilePolicy) -> Result<Vec<f64>> {
    let net = NetworkSpec::from_instance(instance, policy, false)?.build()?;
    Ok(net.node_intensities().to_vec())
}
