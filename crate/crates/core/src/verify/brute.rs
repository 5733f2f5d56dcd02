//! Stationary distributions from the full generator matrix, built directly
//! from the unit dynamics and solved by Gaussian elimination.

use std::collections::HashMap;

use super::linear::generator_stationary_vector;
use crate::error::{Error, Result};
use crate::gordon_newell::{enumerate_states, state_count, NetworkSpec, Station, StationaryDistribution};
use crate::graph;
use crate::matrix::Matrix;
use crate::model::{Instance, QuantilePolicy};
use crate::scalar::Scalar;

pub const BRUTE_FORCE_CAP: usize = 5000;

/// Queues that can ever hold a unit: nodes, then rides, then repositioning
/// links, each in lexicographic order.
fn used_stations<T: Scalar>(spec: &NetworkSpec<T>) -> Vec<Station> {
    let n = spec.n;
    let moves = |k: usize, j: usize| (0..n).any(|i| spec.accepted(i, j) > T::zero() && spec.serving_prob(i, k) > T::zero());
    let mut st: Vec<Station> = (0..n).map(Station::Node).collect();
    for k in 0..n {
        for j in 0..n {
            if k != j && spec.tau(k, j) > T::zero() && moves(k, j) {
                st.push(Station::Ride(k, j));
            }
        }
    }
    for j in 0..n {
        let receives = (0..n).any(|k| moves(k, j));
        for l in 0..n {
            if receives && spec.redirect_prob(j, l) > T::zero() && spec.tau(j, l) > T::zero() {
                st.push(Station::Reposition(j, l));
            }
        }
    }
    st
}

fn check_size(s: usize, m: usize, cap: usize) -> Result<()> {
    let size = state_count(s, m);
    if size > cap {
        return Err(Error::TooLarge { size, cap });
    }
    Ok(())
}

fn solve_irreducible<T: Scalar>(stations: Vec<Station>, states: Vec<Vec<u32>>, q: Matrix<T>) -> Result<StationaryDistribution<T>> {
    if let Some(closed) = graph::closed_class(states.len(), |a, b| a != b && q[(a, b)] > T::zero()) {
        return Err(Error::Reducible { closed });
    }
    let probs = generator_stationary_vector(&q)?;
    Ok(StationaryDistribution { stations, states, probs })
}

/// Generator of a state-independent policy, including link queues when
/// the spec carries travel times.
pub fn generator<T: Scalar>(spec: &NetworkSpec<T>, m: usize, cap: usize) -> Result<(Vec<Station>, Vec<Vec<u32>>, Matrix<T>)> {
    let n = spec.n;
    let stations = used_stations(spec);
    check_size(stations.len(), m, cap)?;
    let pos: HashMap<Station, usize> = stations.iter().enumerate().map(|(k, &s)| (s, k)).collect();
    let states = enumerate_states(stations.len(), m);
    let index: HashMap<&[u32], usize> = states.iter().enumerate().map(|(k, x)| (x.as_slice(), k)).collect();
    // A unit completing a ride into j: redirected (through a link when the
    // move takes time) or parked at j.
    let arrival = |j: usize| -> Vec<(usize, T)> {
        let mut out = Vec::new();
        let mut stay = T::one();
        for l in 0..n {
            let p = spec.redirect_prob(j, l);
            if p > T::zero() {
                stay = stay - p;
                out.push((pos.get(&Station::Reposition(j, l)).copied().unwrap_or(l), p));
            }
        }
        if stay > T::zero() {
            out.push((j, stay));
        }
        out
    };
    let mut q = Matrix::filled(states.len(), states.len(), T::zero());
    let mut add = |from: usize, x: &[u32], leave: usize, enter: usize, rate: T| {
        if leave == enter || rate == T::zero() {
            return;
        }
        let mut y = x.to_vec();
        y[leave] -= 1;
        y[enter] += 1;
        let to = index[y.as_slice()];
        q[(from, to)] = q[(from, to)] + rate;
    };
    for (a, x) in states.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                let acc = spec.accepted(i, j);
                if acc == T::zero() {
                    continue;
                }
                for k in 0..n {
                    let s = spec.serving_prob(i, k);
                    if s == T::zero() || x[k] == 0 {
                        continue;
                    }
                    let rate = acc * s;
                    match pos.get(&Station::Ride(k, j)) {
                        Some(&r) => add(a, x, k, r, rate),
                        None => {
                            for (t, p) in arrival(j) {
                                add(a, x, k, t, rate * p);
                            }
                        }
                    }
                }
            }
        }
        for (s, &st) in stations.iter().enumerate() {
            if x[s] == 0 {
                continue;
            }
            let count = T::of_usize(x[s] as usize);
            match st {
                Station::Node(_) => {}
                Station::Ride(k, j) => {
                    let rate = count / spec.tau(k, j);
                    for (t, p) in arrival(j) {
                        add(a, x, s, t, rate * p);
                    }
                }
                Station::Reposition(j, l) => add(a, x, s, l, count / spec.tau(j, l)),
            }
        }
    }
    Ok((stations, states, q))
}

pub fn generator_stationary<T: Scalar>(spec: &NetworkSpec<T>, m: usize, cap: usize) -> Result<StationaryDistribution<T>> {
    let (stations, states, q) = generator(spec, m, cap)?;
    solve_irreducible(stations, states, q)
}

/// Brute-force stationary distribution of a state-independent policy
/// (travel times included when the instance has them).
pub fn brute_force_stationary(instance: &Instance, policy: &QuantilePolicy, m: usize) -> Result<StationaryDistribution<f64>> {
    let spec = NetworkSpec::from_instance(instance, policy, instance.travel_time.is_some())?;
    generator_stationary(&spec, m, BRUTE_FORCE_CAP)
}

/// Generator over node occupancies for quantiles that depend on the state;
/// a customer at an empty node is never served.
pub fn state_dependent_generator<T: Scalar>(
    phi: &Matrix<T>,
    m: usize,
    q: &dyn Fn(&[u32], usize, usize) -> T,
    cap: usize,
) -> Result<(Vec<Vec<u32>>, Matrix<T>)> {
    let n = phi.rows();
    check_size(n, m, cap)?;
    let states = enumerate_states(n, m);
    let index: HashMap<&[u32], usize> = states.iter().enumerate().map(|(k, x)| (x.as_slice(), k)).collect();
    let mut gen = Matrix::filled(states.len(), states.len(), T::zero());
    for (a, x) in states.iter().enumerate() {
        for i in 0..n {
            if x[i] == 0 {
                continue;
            }
            for j in 0..n {
                if i == j || phi[(i, j)] == T::zero() {
                    continue;
                }
                let rate = phi[(i, j)] * q(x, i, j);
                if rate == T::zero() {
                    continue;
                }
                let mut y = x.clone();
                y[i] -= 1;
                y[j] += 1;
                let b = index[y.as_slice()];
                gen[(a, b)] = gen[(a, b)] + rate;
            }
        }
    }
    Ok((states, gen))
}

pub fn state_dependent_stationary<T: Scalar>(
    phi: &Matrix<T>,
    m: usize,
    q: &dyn Fn(&[u32], usize, usize) -> T,
    cap: usize,
) -> Result<StationaryDistribution<T>> {
    let (states, gen) = state_dependent_generator(phi, m, q, cap)?;
    let stations = (0..phi.rows()).map(Station::Node).collect();
    solve_irreducible(stations, states, gen)
}

/// Long-run objective rate of a state-dependent policy: the expectation
/// over the stationary law of sum_ij phi_ij q_ij(x) I_ij(q_ij(x)) on
/// non-empty origins.
pub fn state_dependent_objective(instance: &Instance, m: usize, q: &dyn Fn(&[u32], usize, usize) -> f64) -> Result<f64> {
    let pi = state_dependent_stationary(&instance.demand, m, q, BRUTE_FORCE_CAP)?;
    let mut v = 0.0;
    for (x, &p) in pi.states.iter().zip(&pi.probs) {
        v += p * state_reward(instance, x, q)?;
    }
    Ok(v)
}

/// Objective rate earned while in state x.
pub(crate) fn state_reward(instance: &Instance, x: &[u32], q: &dyn Fn(&[u32], usize, usize) -> f64) -> Result<f64> {
    let mut v = 0.0;
    for (i, j) in instance.edges() {
        if x[i] == 0 {
            continue;
        }
        let qij = q(x, i, j);
        if qij > 0.0 {
            v += instance.phi(i, j) * instance.reward(instance.objective, i, j, qij)?;
        }
    }
    Ok(v)
}
