//! Seeded random instances for batch checks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::distribution::ValueDistribution;
use super::instance::{Instance, MultiObjective, Units};
use super::reward::RewardKind;
use crate::matrix::Matrix;

#[derive(Debug, Clone)]
pub struct RandomInstanceConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub m_min: u64,
    pub m_max: u64,
    /// Probability of each extra station pair beyond the spanning tree.
    pub extra_pair_prob: f64,
    /// Fixed objective; drawn uniformly when `None`.
    pub objective: Option<RewardKind>,
    /// One value distribution per origin station.
    pub per_origin_dists: bool,
    pub redirect: bool,
    pub matching: bool,
    pub travel_time: bool,
    pub price_grid: bool,
    /// Adds a secondary objective with requirement 0; callers scale it.
    pub multi_objective: bool,
}

impl Default for RandomInstanceConfig {
    fn default() -> Self {
        RandomInstanceConfig {
            n_min: 2,
            n_max: 4,
            m_min: 1,
            m_max: 6,
            extra_pair_prob: 0.5,
            objective: None,
            per_origin_dists: false,
            redirect: false,
            matching: false,
            travel_time: false,
            price_grid: false,
            multi_objective: false,
        }
    }
}

fn random_dist(rng: &mut impl Rng) -> ValueDistribution {
    if rng.gen_bool(0.5) {
        ValueDistribution::exponential(rng.gen_range(0.5..2.0))
    } else {
        let a = rng.gen_range(0.0..1.0);
        ValueDistribution::uniform(a, a + rng.gen_range(0.5..2.0))
    }
}

/// Draws an instance whose demand support is a bidirected connected graph
/// (a random spanning tree plus random extra pairs, both directions).
pub fn random_instance(rng: &mut impl Rng, cfg: &RandomInstanceConfig) -> Instance {
    let n = rng.gen_range(cfg.n_min..=cfg.n_max.max(cfg.n_min));
    let m = rng.gen_range(cfg.m_min..=cfg.m_max.max(cfg.m_min));
    let objective = cfg.objective.unwrap_or_else(|| *RewardKind::ALL.choose(rng).expect("non-empty"));
    let mut support = vec![false; n * n];
    for k in 1..n {
        let parent = rng.gen_range(0..k);
        support[k * n + parent] = true;
        support[parent * n + k] = true;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if !support[i * n + j] && rng.gen_bool(cfg.extra_pair_prob) {
                support[i * n + j] = true;
                support[j * n + i] = true;
            }
        }
    }
    let origin_dists: Vec<ValueDistribution> = (0..n).map(|_| random_dist(rng)).collect();
    let mut demand = Matrix::zeros(n, n);
    let mut dists = Matrix::filled(n, n, None);
    for i in 0..n {
        for j in 0..n {
            if support[i * n + j] {
                demand[(i, j)] = rng.gen_range(0.1..2.0);
                dists[(i, j)] = Some(if cfg.per_origin_dists { origin_dists[i] } else { random_dist(rng) });
            }
        }
    }
    let mut inst = Instance::new(Units::Finite(m), objective, demand, dists);
    if cfg.redirect {
        inst.redirect_cost = Some(Matrix::from_fn(n, n, |i, j| {
            if i != j && rng.gen_bool(0.7) {
                rng.gen_range(0.0..1.0)
            } else {
                f64::INFINITY
            }
        }));
    }
    if cfg.matching {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen_bool(0.5) {
                    edges.push((i, j));
                }
            }
        }
        inst.matching_edges = Some(edges);
    }
    if cfg.travel_time {
        inst.travel_time = Some(Matrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { rng.gen_range(0.1..1.0) }));
    }
    if cfg.price_grid {
        inst.price_grid = Some(
            (0..n)
                .map(|i| {
                    let k = rng.gen_range(3..=6);
                    // Inside the origin's support so every grid price sells.
                    let (lo, hi) = match (cfg.per_origin_dists, origin_dists[i]) {
                        (true, ValueDistribution::Uniform { a, b }) => (a, b),
                        (true, ValueDistribution::Exponential { rate }) => (0.0, 3.0 / rate),
                        (false, _) => (0.0, 3.0),
                    };
                    let mut prices: Vec<f64> = (0..k).map(|_| rng.gen_range(lo..hi)).collect();
                    prices.sort_by(f64::total_cmp);
                    prices.dedup();
                    prices
                })
                .collect(),
        );
    }
    if cfg.multi_objective {
        let others: Vec<RewardKind> = RewardKind::ALL.into_iter().filter(|&k| k != objective).collect();
        inst.multi_objective = Some(MultiObjective { kind: *others.choose(rng).expect("non-empty"), requirement: 0.0 });
    }
    inst
}

pub fn random_instance_seeded(seed: u64, cfg: &RandomInstanceConfig) -> Instance {
    random_instance(&mut ChaCha8Rng::seed_from_u64(seed), cfg)
}
