//! Connectivity repair: perturb a circulation so its support becomes
//! strongly connected while losing at most a fraction eps of every flow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{component_count, shortest_path, strongly_connected_components};
use crate::matrix::Matrix;
use crate::model::Instance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairReport {
    pub q: Matrix<f64>,
    pub initial_components: usize,
    pub rounds: usize,
    /// Base perturbation; round r uses delta / 2^r.
    pub delta: f64,
}

fn imbalance(n: usize, f: &Matrix<f64>) -> f64 {
    (0..n).map(|i| (f.col_sum(i) - f.row_sum(i)).abs()).fold(0.0, f64::max)
}

/// Shortest cycle through component `start` in the component graph of the
/// demand support. Returns the component sequence, starting at `start`.
fn component_cycle(k: usize, start: usize, cadj: &[Vec<bool>]) -> Option<Vec<usize>> {
    let mut prev = vec![usize::MAX; k];
    let mut seen = vec![false; k];
    seen[start] = true;
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        if c != start && cadj[c][start] {
            let mut cyc = vec![c];
            let mut cur = c;
            while prev[cur] != start {
                cur = prev[cur];
                cyc.push(cur);
            }
            cyc.push(start);
            cyc.reverse();
            return Some(cyc);
        }
        for d in 0..k {
            if !seen[d] && cadj[c][d] {
                seen[d] = true;
                prev[d] = c;
                queue.push_back(d);
            }
        }
    }
    None
}

pub fn connectivity_repair(instance: &Instance, q: &Matrix<f64>, eps: f64) -> Result<RepairReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("repair needs 0 < eps < 1, got {eps}")));
    }
    let n = instance.n;
    if !crate::graph::is_strongly_connected(n, |i, j| instance.phi(i, j) > 0.0) {
        return Err(Error::Precondition("demand support is not strongly connected".into()));
    }
    let mut f = Matrix::from_fn(n, n, |i, j| instance.phi(i, j) * q[(i, j)]);
    let scale = f.to_rows().iter().flatten().fold(1.0f64, |a, &b| a.max(b.abs()));
    if imbalance(n, &f) > 1e-9 * scale {
        return Err(Error::Precondition("input flow is not a circulation".into()));
    }
    let comp = strongly_connected_components(n, |i, j| f[(i, j)] > 0.0);
    let k0 = component_count(&comp);
    let positive = |m: &Matrix<f64>| m.to_rows().into_iter().flatten().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
    let floor = positive(&f).min(positive(&instance.demand));
    let delta = eps / k0 as f64 * floor;
    let mut rounds = 0;
    loop {
        let comp = strongly_connected_components(n, |i, j| f[(i, j)] > 0.0);
        let k = component_count(&comp);
        if k == 1 {
            break;
        }
        let mut cadj = vec![vec![false; k]; k];
        for (i, j) in instance.edges() {
            if comp[i] != comp[j] {
                cadj[comp[i]][comp[j]] = true;
            }
        }
        let cycle = component_cycle(k, comp[0], &cadj)
            .ok_or_else(|| Error::Precondition("no component cycle in demand support".into()))?;
        let len = cycle.len();
        // Lowest-index demand edge bridging consecutive components.
        let bridges: Vec<(usize, usize)> = (0..len)
            .map(|l| {
                let (a, b) = (cycle[l], cycle[(l + 1) % len]);
                instance.edges().into_iter().find(|&(i, j)| comp[i] == a && comp[j] == b).expect("bridge exists")
            })
            .collect();
        let d = delta / f64::powi(2.0, rounds as i32);
        let mut paths = Vec::with_capacity(len);
        for l in 0..len {
            // Enter component cycle[l+1] at v_l, leave it at u_{l+1}.
            let v = bridges[l].1;
            let u = bridges[(l + 1) % len].0;
            let c = comp[v];
            if u != v {
                let path = shortest_path(n, u, v, |a, b| comp[a] == c && comp[b] == c && f[(a, b)] > 0.0)
                    .ok_or_else(|| Error::Precondition("component lost strong connectivity".into()))?;
                paths.push(path);
            }
        }
        for &(a, b) in &bridges {
            f[(a, b)] += d;
        }
        for path in &paths {
            for w in path.windows(2) {
                f[(w[0], w[1])] -= d;
            }
        }
        rounds += 1;
        if rounds > n {
            return Err(Error::IterationLimit(rounds));
        }
    }
    let q = Matrix::from_fn(n, n, |i, j| if instance.phi(i, j) > 0.0 { (f[(i, j)] / instance.phi(i, j)).clamp(0.0, 1.0) } else { 0.0 });
    Ok(RepairReport { q, initial_components: k0, rounds, delta })
}
