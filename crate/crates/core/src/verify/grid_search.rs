//! Best state-dependent quantile assignment on a finite grid.

use serde::{Deserialize, Serialize};

use super::brute::{state_dependent_generator, state_reward, BRUTE_FORCE_CAP};
use crate::error::{Error, Result};
use crate::gordon_newell::gth;
use crate::graph::{component_count, strongly_connected_components};
use crate::matrix::Matrix;
use crate::model::Instance;

pub const DEFAULT_BUDGET: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub states: Vec<Vec<u32>>,
    pub edges: Vec<(usize, usize)>,
    /// assignment[s][e]: quantile on edge e in state s (0 where the origin
    /// is empty).
    pub assignment: Vec<Vec<f64>>,
    pub objective: f64,
    pub grid: Vec<f64>,
    /// Exhaustive over the grid; otherwise a coordinate-ascent heuristic.
    pub certified: bool,
    pub evaluations: usize,
    /// Best state-independent assignment on the same grid, when searched.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_state_independent: Option<f64>,
}

/// Objective of the best closed class of the chain: a reducible policy
/// can be started inside any of its closed classes.
fn best_class_value(instance: &Instance, states: &[Vec<u32>], gen: &Matrix<f64>, q: &dyn Fn(&[u32], usize, usize) -> f64) -> Result<f64> {
    let n = states.len();
    let comp = strongly_connected_components(n, |a, b| a != b && gen[(a, b)] > 0.0);
    let k = component_count(&comp);
    let mut closed = vec![true; k];
    for a in 0..n {
        for b in 0..n {
            if a != b && gen[(a, b)] > 0.0 && comp[a] != comp[b] {
                closed[comp[a]] = false;
            }
        }
    }
    let mut best = f64::NEG_INFINITY;
    for c in (0..k).filter(|&c| closed[c]) {
        let members: Vec<usize> = (0..n).filter(|&a| comp[a] == c).collect();
        let sub = Matrix::from_fn(members.len(), members.len(), |x, y| gen[(members[x], members[y])]);
        let pi = gth(&sub)?;
        let mut v = 0.0;
        for (&a, p) in members.iter().zip(pi) {
            v += p * state_reward(instance, &states[a], q)?;
        }
        best = best.max(v);
    }
    Ok(best)
}

struct Search<'a> {
    instance: &'a Instance,
    m: usize,
    states: Vec<Vec<u32>>,
    edges: Vec<(usize, usize)>,
    /// Decision variables: (state, edge) pairs with a non-empty origin.
    vars: Vec<(usize, usize)>,
    grid: &'a [f64],
    evaluations: usize,
}

impl Search<'_> {
    fn evaluate(&mut self, levels: &[usize]) -> Result<f64> {
        self.evaluations += 1;
        let lookup = self.lookup(self.table(levels));
        let (_, gen) = state_dependent_generator(&self.instance.demand, self.m, &lookup, BRUTE_FORCE_CAP)?;
        best_class_value(self.instance, &self.states, &gen, &lookup)
    }

    fn lookup(&self, table: Vec<Vec<f64>>) -> impl Fn(&[u32], usize, usize) -> f64 {
        let states = self.states.clone();
        let edges = self.edges.clone();
        move |x: &[u32], i: usize, j: usize| {
            let s = states.iter().position(|y| y.as_slice() == x).expect("known state");
            edges.binary_search(&(i, j)).map_or(0.0, |e| table[s][e])
        }
    }

    fn table(&self, levels: &[usize]) -> Vec<Vec<f64>> {
        let mut table = vec![vec![0.0; self.edges.len()]; self.states.len()];
        for (v, &(s, e)) in self.vars.iter().enumerate() {
            table[s][e] = self.grid[levels[v]];
        }
        table
    }
}

/// Exhaustive search when m = 1, n <= 3 and the grid has at most 5 levels
/// (and the count fits the budget); coordinate ascent from every constant
/// start otherwise.
pub fn brute_force_state_dependent_opt(instance: &Instance, m: usize, grid: &[f64], budget: usize) -> Result<GridSearchResult> {
    if grid.is_empty() || grid.iter().any(|&g| !(0.0..=1.0).contains(&g)) {
        return Err(Error::Domain("quantile grid must be non-empty and inside [0, 1]".into()));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let n = instance.n;
    let states = crate::gordon_newell::enumerate_states(n, m);
    if states.len() > BRUTE_FORCE_CAP {
        return Err(Error::TooLarge { size: states.len(), cap: BRUTE_FORCE_CAP });
    }
    let edges = instance.edges();
    let vars: Vec<(usize, usize)> = states
        .iter()
        .enumerate()
        .flat_map(|(s, x)| edges.iter().enumerate().filter(|(_, e)| x[e.0] > 0).map(move |(e, _)| (s, e)))
        .collect();
    let mut search = Search { instance, m, states, edges, vars, grid: &grid, evaluations: 0 };
    let levels = grid.len();
    let combos = (levels as f64).powi(search.vars.len() as i32);
    let exhaustive = m == 1 && n <= 3 && levels <= 5 && combos <= budget as f64;
    let mut best = (f64::NEG_INFINITY, vec![0; search.vars.len()]);
    if exhaustive {
        let mut cur = vec![0usize; search.vars.len()];
        loop {
            let v = search.evaluate(&cur)?;
            if v > best.0 {
                best = (v, cur.clone());
            }
            // Odometer increment.
            let mut k = 0;
            while k < cur.len() && cur[k] + 1 == levels {
                cur[k] = 0;
                k += 1;
            }
            if k == cur.len() {
                break;
            }
            cur[k] += 1;
        }
    } else {
        'starts: for start in (0..levels).rev() {
            let mut cur = vec![start; search.vars.len()];
            let mut val = search.evaluate(&cur)?;
            loop {
                let mut improved = false;
                for v in 0..cur.len() {
                    for l in 0..levels {
                        if l == cur[v] {
                            continue;
                        }
                        if search.evaluations >= budget {
                            if val > best.0 {
                                best = (val, cur.clone());
                            }
                            break 'starts;
                        }
                        let old = cur[v];
                        cur[v] = l;
                        let cand = search.evaluate(&cur)?;
                        if cand > val + 1e-15 {
                            val = cand;
                            improved = true;
                        } else {
                            cur[v] = old;
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
            if val > best.0 {
                best = (val, cur);
            }
        }
    }
    // State-independent assignments on the same grid.
    let e = search.edges.len();
    let best_state_independent = if exhaustive && (levels as f64).powi(e as i32) <= budget as f64 {
        let mut cur = vec![0usize; e];
        let mut top = f64::NEG_INFINITY;
        loop {
            let table: Vec<Vec<f64>> = vec![cur.iter().map(|&l| grid[l]).collect(); search.states.len()];
            let lookup = search.lookup(table);
            let (_, gen) = state_dependent_generator(&instance.demand, m, &lookup, BRUTE_FORCE_CAP)?;
            search.evaluations += 1;
            top = top.max(best_class_value(instance, &search.states, &gen, &lookup)?);
            let mut k = 0;
            while k < e && cur[k] + 1 == levels {
                cur[k] = 0;
                k += 1;
            }
            if k == e {
                break;
            }
            cur[k] += 1;
        }
        Some(top)
    } else {
        None
    };
    let assignment = search.table(&best.1);
    let evaluations = search.evaluations;
    let (states, edges) = (search.states, search.edges);
    Ok(GridSearchResult {
        assignment,
        states,
        edges,
        objective: best.0,
        grid: grid.clone(),
        certified: exhaustive,
        evaluations,
        best_state_independent,
    })
}
