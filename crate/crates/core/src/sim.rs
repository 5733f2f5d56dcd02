//! Seeded continuous-time Markov chain simulation of the finite-unit system.
//!
//! Replication `r` draws from `ChaCha8Rng::seed_from_u64(seed)` with stream
//! `r`, so replications are independent and the result does not depend on
//! how they are scheduled.

use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gordon_newell::{NetworkSpec, Station};
use crate::matrix::Matrix;
use crate::model::instance::validate_or_err;
use crate::model::{Instance, QuantilePolicy};

/// How a matched customer finds a unit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchingRule {
    /// The serving station k is drawn with probability mu_ik (the residual
    /// on k = i); the customer is lost if k is empty. Product form holds.
    #[default]
    Designated,
    /// Serve from i if it has a unit, otherwise from a neighbour with units
    /// drawn proportionally to mu_ik; lost if none has a unit.
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub horizon: f64,
    pub warmup: f64,
    pub replications: usize,
    #[serde(default)]
    pub matching_rule: MatchingRule,
    /// Record time-average frequencies of full network states.
    #[serde(default)]
    pub track_occupancy: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 0,
            horizon: 1e4,
            warmup: 0.2,
            replications: 10,
            matching_rule: MatchingRule::Designated,
            track_occupancy: false,
        }
    }
}

impl SimConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Domain(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(0.0..1.0).contains(&self.warmup) {
            return Err(Error::Domain(format!("warmup must lie in [0, 1), got {}", self.warmup)));
        }
        if self.replications == 0 {
            return Err(Error::Domain("at least one replication is required".into()));
        }
        Ok(())
    }
}

/// Quantiles as a function of the node occupancy vector.
pub trait StatePolicy: Sync {
    fn quantile(&self, nodes: &[u64], i: usize, j: usize) -> f64;
}

impl<F: Fn(&[u64], usize, usize) -> f64 + Sync> StatePolicy for F {
    fn quantile(&self, nodes: &[u64], i: usize, j: usize) -> f64 {
        self(nodes, i, j)
    }
}

#[derive(Clone, Copy)]
pub enum SimPolicy<'a> {
    Static(&'a QuantilePolicy),
    State(&'a dyn StatePolicy),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounts {
    pub arrivals: u64,
    pub rides: u64,
    pub lost: u64,
    pub redirections: u64,
    pub link_completions: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub flows: Matrix<f64>,
    pub redirect_rates: Matrix<f64>,
    pub availabilities: Vec<f64>,
    pub objective: f64,
    pub events: EventCounts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occupancy: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyEntry {
    pub state: Vec<u64>,
    pub frequency: f64,
    pub half_width: f64,
}

/// Means over replications with normal-approximation 95% half-widths
/// (NaN, serialized as null, when there is a single replication).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub m: u64,
    pub horizon: f64,
    pub warmup: f64,
    pub flows: Matrix<f64>,
    pub flow_half_width: Matrix<f64>,
    pub availabilities: Vec<f64>,
    pub availability_half_width: Vec<f64>,
    pub redirect_rates: Matrix<f64>,
    pub objective: f64,
    pub objective_half_width: f64,
    pub events: EventCounts,
    /// Station order of occupancy states.
    pub stations: Vec<Station>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occupancy: Option<Vec<OccupancyEntry>>,
    pub replications: Vec<Replication>,
}

/// Mean and 1.96 sd / sqrt(R).
pub fn mean_half_width(xs: &[f64]) -> (f64, f64) {
    let r = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / r;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1.0);
    (mean, 1.96 * (var / r).sqrt())
}

/// Units split as evenly as possible, remainder to the lowest indices.
pub fn initial_state(n: usize, m: u64) -> Vec<u64> {
    (0..n).map(|i| m / n as u64 + u64::from((i as u64) < m % n as u64)).collect()
}

struct Model<'a> {
    instance: &'a Instance,
    spec: NetworkSpec<f64>,
    policy: SimPolicy<'a>,
    rule: MatchingRule,
    m: u64,
    edges: Vec<(usize, usize)>,
    arrivals: Option<WeightedIndex<f64>>,
    total_rate: f64,
    /// Per origin: candidate serving stations and their weights.
    serving: Vec<Vec<(usize, f64)>>,
    /// Per arrival station: redirect targets with probabilities.
    redirects: Vec<Vec<(usize, f64)>>,
    /// Link stations with mean sojourn times.
    links: Vec<(Station, f64)>,
    ride_link: Matrix<Option<usize>>,
    repo_link: Matrix<Option<usize>>,
}

impl<'a> Model<'a> {
    fn new(instance: &'a Instance, policy: SimPolicy<'a>, rule: MatchingRule) -> Result<Self> {
        validate_or_err(instance)?;
        let m = instance.units().map_err(|_| Error::Precondition("simulation needs a finite fleet".into()))?;
        let n = instance.n;
        let base = match policy {
            SimPolicy::Static(p) => p.clone(),
            SimPolicy::State(_) => QuantilePolicy::constant(instance, 1.0),
        };
        let spec = NetworkSpec::from_instance(instance, &base, true)?;
        let edges = instance.edges();
        let weights: Vec<f64> = edges.iter().map(|&(i, j)| instance.phi(i, j)).collect();
        let total_rate = weights.iter().sum();
        let arrivals = WeightedIndex::new(&weights).ok();
        let serving = (0..n)
            .map(|i| (0..n).map(|k| (k, spec.serving_prob(i, k))).filter(|&(_, p)| p > 0.0).collect())
            .collect();
        let redirects = (0..n)
            .map(|j| (0..n).map(|l| (l, spec.redirect_prob(j, l))).filter(|&(_, p)| p > 0.0).collect())
            .collect();
        let mut links = Vec::new();
        let mut ride_link = Matrix::filled(n, n, None);
        let mut repo_link = Matrix::filled(n, n, None);
        for k in 0..n {
            for j in 0..n {
                if k != j && spec.tau(k, j) > 0.0 {
                    ride_link[(k, j)] = Some(links.len());
                    links.push((Station::Ride(k, j), spec.tau(k, j)));
                }
            }
        }
        for j in 0..n {
            for l in 0..n {
                if spec.redirect_prob(j, l) > 0.0 && spec.tau(j, l) > 0.0 {
                    repo_link[(j, l)] = Some(links.len());
                    links.push((Station::Reposition(j, l), spec.tau(j, l)));
                }
            }
        }
        Ok(Model {
            instance,
            spec,
            policy,
            rule,
            m,
            edges,
            arrivals,
            total_rate,
            serving,
            redirects,
            links,
            ride_link,
            repo_link,
        })
    }

    fn stations(&self) -> Vec<Station> {
        (0..self.instance.n).map(Station::Node).chain(self.links.iter().map(|l| l.0)).collect()
    }

    fn quantile(&self, nodes: &[u64], i: usize, j: usize) -> f64 {
        match self.policy {
            SimPolicy::Static(_) => self.spec.q[(i, j)],
            SimPolicy::State(p) => {
                if nodes[i] == 0 {
                    0.0
                } else {
                    p.quantile(nodes, i, j).clamp(0.0, 1.0)
                }
            }
        }
    }

    fn source(&self, rng: &mut ChaCha8Rng, nodes: &[u64], i: usize) -> Option<usize> {
        let cands = &self.serving[i];
        match self.rule {
            MatchingRule::Designated => {
                let mut u = rng.gen::<f64>();
                let mut pick = cands.last().map(|c| c.0);
                for &(k, p) in cands {
                    if u < p {
                        pick = Some(k);
                        break;
                    }
                    u -= p;
                }
                pick.filter(|&k| nodes[k] > 0)
            }
            MatchingRule::Fallback => {
                if nodes[i] > 0 {
                    return Some(i);
                }
                let avail: Vec<(usize, f64)> = cands.iter().copied().filter(|&(k, _)| k != i && nodes[k] > 0).collect();
                let total: f64 = avail.iter().map(|a| a.1).sum();
                if total <= 0.0 {
                    return None;
                }
                let mut u = rng.gen::<f64>() * total;
                for &(k, p) in &avail {
                    if u < p {
                        return Some(k);
                    }
                    u -= p;
                }
                avail.last().map(|a| a.0)
            }
        }
    }

    fn run(&self, cfg: &SimConfig, rep: usize) -> Replication {
        let n = self.instance.n;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(rep as u64);
        let mut nodes = initial_state(n, self.m);
        let mut links = vec![0u64; self.links.len()];
        let t_warm = cfg.horizon * cfg.warmup;
        let window = cfg.horizon - t_warm;
        let mut rides: Matrix<f64> = Matrix::zeros(n, n);
        let mut redirected: Matrix<f64> = Matrix::zeros(n, n);
        let mut busy = vec![0.0; n];
        let mut reward = 0.0;
        let mut cost = 0.0;
        let mut events = EventCounts::default();
        let mut occupancy: Option<BTreeMap<Vec<u64>, f64>> = cfg.track_occupancy.then(BTreeMap::new);
        let mut t = 0.0;
        loop {
            let link_rate: f64 = links.iter().zip(&self.links).map(|(&c, l)| c as f64 / l.1).sum();
            let rate = self.total_rate + link_rate;
            let dt = if rate > 0.0 { -(1.0 - rng.gen::<f64>()).ln() / rate } else { f64::INFINITY };
            let next = t + dt;
            let lo = t.max(t_warm);
            let hi = next.min(cfg.horizon);
            if hi > lo {
                for i in 0..n {
                    if nodes[i] > 0 {
                        busy[i] += hi - lo;
                    }
                }
                if let Some(occ) = occupancy.as_mut() {
                    let key: Vec<u64> = nodes.iter().chain(&links).copied().collect();
                    *occ.entry(key).or_insert(0.0) += hi - lo;
                }
            }
            if next >= cfg.horizon {
                break;
            }
            t = next;
            let counted = t >= t_warm;
            if rng.gen::<f64>() * rate < self.total_rate {
                events.arrivals += 1;
                let (i, j) = self.edges[self.arrivals.as_ref().expect("positive demand").sample(&mut rng)];
                let q = self.quantile(&nodes, i, j);
                if rng.gen::<f64>() >= q {
                    continue;
                }
                let Some(k) = self.source(&mut rng, &nodes, i) else {
                    events.lost += 1;
                    continue;
                };
                debug_assert!(nodes[k] > 0);
                nodes[k] -= 1;
                events.rides += 1;
                if counted {
                    rides[(i, j)] += 1.0;
                    reward += self.instance.per_ride(self.instance.objective, i, j, q).expect("valid quantile");
                }
                match self.ride_link[(k, j)] {
                    Some(s) => links[s] += 1,
                    None => self.arrive(&mut rng, j, &mut nodes, &mut links, counted, &mut redirected, &mut cost, &mut events),
                }
            } else {
                events.link_completions += 1;
                let mut u = rng.gen::<f64>() * link_rate;
                let mut s = links.iter().rposition(|&c| c > 0).expect("occupied link");
                for (idx, (&c, l)) in links.iter().zip(&self.links).enumerate() {
                    let r = c as f64 / l.1;
                    if u < r {
                        s = idx;
                        break;
                    }
                    u -= r;
                }
                links[s] -= 1;
                match self.links[s].0 {
                    Station::Ride(_, j) => {
                        self.arrive(&mut rng, j, &mut nodes, &mut links, counted, &mut redirected, &mut cost, &mut events)
                    }
                    Station::Reposition(_, l) => nodes[l] += 1,
                    Station::Node(_) => unreachable!(),
                }
            }
            debug_assert_eq!(nodes.iter().sum::<u64>() + links.iter().sum::<u64>(), self.m);
        }
        Replication {
            flows: rides.map(|v| v / window),
            redirect_rates: redirected.map(|v| v / window),
            availabilities: busy.iter().map(|b| b / window).collect(),
            objective: (reward - cost) / window,
            events,
            occupancy: occupancy.map(|o| {
                o.into_iter().map(|(k, v)| (k.iter().map(u64::to_string).collect::<Vec<_>>().join(","), v / window)).collect()
            }),
        }
    }

    /// A unit finishing a ride at j: redirect or park.
    #[allow(clippy::too_many_arguments)]
    fn arrive(
        &self,
        rng: &mut ChaCha8Rng,
        j: usize,
        nodes: &mut [u64],
        links: &mut [u64],
        counted: bool,
        redirected: &mut Matrix<f64>,
        cost: &mut f64,
        events: &mut EventCounts,
    ) {
        let opts = &self.redirects[j];
        if !opts.is_empty() {
            let mut u = rng.gen::<f64>();
            for &(l, p) in opts {
                if u < p {
                    events.redirections += 1;
                    if counted {
                        redirected[(j, l)] += 1.0;
                        *cost += self.instance.cost(j, l);
                    }
                    match self.repo_link[(j, l)] {
                        Some(s) => links[s] += 1,
                        None => nodes[l] += 1,
                    }
                    return;
                }
                u -= p;
            }
        }
        nodes[j] += 1;
    }
}

pub fn simulate(instance: &Instance, policy: SimPolicy<'_>, config: &SimConfig) -> Result<SimResult> {
    config.check()?;
    let model = Model::new(instance, policy, config.matching_rule)?;
    let reps: Vec<Replication> = (0..config.replications).into_par_iter().map(|r| model.run(config, r)).collect();
    let n = instance.n;
    let stat = |f: &dyn Fn(&Replication) -> f64| mean_half_width(&reps.iter().map(f).collect::<Vec<_>>());
    let mut flows = Matrix::zeros(n, n);
    let mut flow_hw = Matrix::zeros(n, n);
    let mut redirect_rates = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            (flows[(i, j)], flow_hw[(i, j)]) = stat(&|r| r.flows[(i, j)]);
            redirect_rates[(i, j)] = stat(&|r| r.redirect_rates[(i, j)]).0;
        }
    }
    let (availabilities, availability_half_width) = (0..n).map(|i| stat(&|r| r.availabilities[i])).unzip();
    let (objective, objective_half_width) = stat(&|r| r.objective);
    let mut events = EventCounts::default();
    for r in &reps {
        events.arrivals += r.events.arrivals;
        events.rides += r.events.rides;
        events.lost += r.events.lost;
        events.redirections += r.events.redirections;
        events.link_completions += r.events.link_completions;
    }
    let occupancy = config.track_occupancy.then(|| {
        let mut keys: Vec<&String> = reps.iter().flat_map(|r| r.occupancy.as_ref().unwrap().keys()).collect();
        keys.sort();
        keys.dedup();
        keys.into_iter()
            .map(|k| {
                let (frequency, half_width) = stat(&|r| r.occupancy.as_ref().unwrap().get(k).copied().unwrap_or(0.0));
                OccupancyEntry { state: k.split(',').map(|s| s.parse().unwrap()).collect(), frequency, half_width }
            })
            .collect()
    });
    Ok(SimResult {
        m: model.m,
        horizon: config.horizon,
        warmup: config.warmup,
        flows,
        flow_half_width: flow_hw,
        availabilities,
        availability_half_width,
        redirect_rates,
        objective,
        objective_half_width,
        events,
        stations: model.stations(),
        occupancy,
        replications: reps,
    })
}

/// Objective recomputed from empirical flows: sum of flow times per-ride
/// reward at the policy's quantiles, minus redirection costs.
pub fn estimate_objective(result: &SimResult, instance: &Instance, policy: &QuantilePolicy) -> Result<(f64, f64)> {
    let per_rep = result
        .replications
        .iter()
        .map(|r| {
            let mut v = 0.0;
            for (i, j) in instance.edges() {
                if r.flows[(i, j)] > 0.0 {
                    v += r.flows[(i, j)] * instance.per_ride(instance.objective, i, j, policy.q[(i, j)])?;
                }
            }
            for (j, l) in instance.redirect_pairs() {
                if r.redirect_rates[(j, l)] > 0.0 {
                    v -= r.redirect_rates[(j, l)] * instance.cost(j, l);
                }
            }
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(mean_half_width(&per_rep))
}
