//! Separable concave maximization over polytopes.
//!
//! Each concave term is replaced by its piecewise-linear interpolant on a
//! breakpoint grid (an inner approximation, so LP points are feasible for
//! concave >= rows). The LP duals give a Lagrangian upper bound on the true
//! optimum; the per-term maximizers of the Lagrangian become new
//! breakpoints until the certified gap meets the tolerance.

use serde::{Deserialize, Serialize};

use super::lp::{lp_solve, LinearProgram, LpOptions, Sense};
use crate::error::{Error, Result};
use crate::model::{check_concavity, marginal_reward, reward_curve, RewardKind, ValueDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Initial uniform breakpoints per concave term.
    pub breakpoints: usize,
    pub max_breakpoints: usize,
    /// Relative gap tolerance.
    pub gap_tolerance: f64,
    pub feasibility_tolerance: f64,
    pub max_rounds: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { breakpoints: 64, max_breakpoints: 1024, gap_tolerance: 1e-6, feasibility_tolerance: 1e-8, max_rounds: 200 }
    }
}

impl SolverConfig {
    pub fn check(&self) -> Result<()> {
        if self.breakpoints < 2 || self.max_breakpoints < self.breakpoints {
            return Err(Error::Domain("need 2 <= breakpoints <= max_breakpoints".into()));
        }
        if !(self.gap_tolerance > 0.0 && self.feasibility_tolerance > 0.0) {
            return Err(Error::Domain("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// A function of one variable on [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Curve {
    Reward { kind: RewardKind, dist: ValueDistribution },
    Linear { slope: f64 },
}

impl Curve {
    pub fn value(&self, q: f64) -> f64 {
        match self {
            Curve::Reward { kind, dist } => reward_curve(*kind, dist, q.clamp(0.0, 1.0)).expect("q in [0, 1]"),
            Curve::Linear { slope } => slope * q,
        }
    }

    pub fn slope(&self, q: f64) -> f64 {
        match self {
            Curve::Reward { kind, dist } => marginal_reward(*kind, dist, q),
            Curve::Linear { slope } => *slope,
        }
    }

    fn is_linear(&self) -> bool {
        matches!(self, Curve::Linear { .. } | Curve::Reward { kind: RewardKind::Throughput, .. })
    }
}

/// weight * curve(q) for one bounded variable q in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub weight: f64,
    pub curve: Curve,
    /// Label used in error messages.
    pub edge: (usize, usize),
}

impl Term {
    pub fn value(&self, q: f64) -> f64 {
        if self.weight == 0.0 {
            0.0
        } else {
            self.weight * self.curve.value(q)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    /// Concave-term variable, boxed in [0, 1].
    Q(usize),
    /// Linear variable, boxed in [0, upper].
    Z(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearVar {
    pub cost: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(Var, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// maximize sum_v terms[v](q_v) + sum_k cost_k z_k subject to linear rows and
/// optionally sum_v psi[v](q_v) >= requirement.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SeparableProgram {
    pub terms: Vec<Term>,
    pub linear: Vec<LinearVar>,
    pub rows: Vec<Row>,
    pub psi: Option<(Vec<Term>, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub rounds: usize,
    pub pivots: usize,
    pub max_breakpoints: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparableSolution {
    pub q: Vec<f64>,
    pub z: Vec<f64>,
    /// Exact objective at (q, z).
    pub value: f64,
    pub upper_bound: f64,
    pub gap: f64,
    pub converged: bool,
    /// Exact secondary value at q, when present.
    pub psi_value: Option<f64>,
    pub stats: SolverStats,
}

impl SeparableProgram {
    pub fn objective_at(&self, q: &[f64], z: &[f64]) -> f64 {
        let a: f64 = self.terms.iter().zip(q).map(|(t, &v)| t.value(v)).sum();
        let b: f64 = self.linear.iter().zip(z).map(|(l, &v)| l.cost * v).sum();
        a + b
    }

    pub fn psi_at(&self, q: &[f64]) -> Option<f64> {
        self.psi.as_ref().map(|(terms, _)| terms.iter().zip(q).map(|(t, &v)| t.value(v)).sum())
    }

    /// Largest violation of the linear rows and boxes at (q, z).
    pub fn max_violation(&self, q: &[f64], z: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for &v in q {
            worst = worst.max(-v).max(v - 1.0);
        }
        for (l, &v) in self.linear.iter().zip(z) {
            worst = worst.max(-v).max(v - l.upper);
        }
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().map(|&(var, a)| a * self.var_value(var, q, z)).sum();
            let d = lhs - row.rhs;
            worst = worst.max(match row.sense {
                Sense::Le => d,
                Sense::Ge => -d,
                Sense::Eq => d.abs(),
            });
        }
        worst
    }

    fn var_value(&self, var: Var, q: &[f64], z: &[f64]) -> f64 {
        match var {
            Var::Q(v) => q[v],
            Var::Z(k) => z[k],
        }
    }
}

/// Maximizes a concave h on [0, 1] given its (non-increasing) derivative.
/// Returns (argmax, value there, certified upper bound on the maximum).
pub fn maximize_concave_1d(h: impl Fn(f64) -> f64, dh: impl Fn(f64) -> f64) -> (f64, f64, f64) {
    let (h0, h1) = (h(0.0), h(1.0));
    if dh(1.0) >= 0.0 {
        return (1.0, h1, h1);
    }
    if dh(0.0) <= 0.0 {
        return (0.0, h0, h0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if dh(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (hl, hh) = (h(lo), h(hi));
    let (arg, val) = if hl >= hh { (lo, hl) } else { (hi, hh) };
    // Tangent bounds over the final bracket.
    let width = hi - lo;
    let mut ub = f64::INFINITY;
    let dl = dh(lo);
    if dl.is_finite() {
        ub = ub.min(hl + dl.max(0.0) * width);
    }
    let dhh = dh(hi);
    if dhh.is_finite() {
        ub = ub.min(hh + (-dhh).max(0.0) * width);
    }
    if !ub.is_finite() {
        ub = val;
    }
    (arg, val, ub.max(val))
}

fn uniform_grid(k: usize) -> Vec<f64> {
    (0..k).map(|s| s as f64 / (k - 1) as f64).collect()
}

fn insert_point(grid: &mut Vec<f64>, x: f64) -> bool {
    let pos = grid.partition_point(|&g| g < x);
    let near = |i: usize| grid.get(i).is_some_and(|&g| (g - x).abs() < 1e-9);
    if near(pos) || (pos > 0 && near(pos - 1)) {
        return false;
    }
    grid.insert(pos, x);
    true
}

struct Built {
    lp: LinearProgram,
    /// First LP column and segment count of each concave variable.
    seg: Vec<(usize, usize)>,
    z_col: Vec<usize>,
    psi_row: Option<usize>,
}

fn build_lp(prog: &SeparableProgram, grids: &[Vec<f64>], psi_rhs: f64) -> Built {
    let mut lp = LinearProgram::default();
    let mut seg = Vec::with_capacity(prog.terms.len());
    let mut psi_coeffs = Vec::new();
    for (v, term) in prog.terms.iter().enumerate() {
        let g = &grids[v];
        let start = lp.num_vars();
        for s in 1..g.len() {
            let (a, b) = (g[s - 1], g[s]);
            let slope = (term.value(b) - term.value(a)) / (b - a);
            let col = lp.add_var(slope, 0.0, b - a);
            if let Some((psi, _)) = &prog.psi {
                let ps = (psi[v].value(b) - psi[v].value(a)) / (b - a);
                if ps != 0.0 {
                    psi_coeffs.push((col, ps));
                }
            }
        }
        seg.push((start, g.len() - 1));
    }
    let z_col: Vec<usize> = prog.linear.iter().map(|l| lp.add_var(l.cost, 0.0, l.upper)).collect();
    for row in &prog.rows {
        let mut coeffs = Vec::new();
        for &(var, a) in &row.coeffs {
            match var {
                Var::Q(v) => {
                    let (start, count) = seg[v];
                    coeffs.extend((start..start + count).map(|c| (c, a)));
                }
                Var::Z(k) => coeffs.push((z_col[k], a)),
            }
        }
        lp.add_row(coeffs, row.sense, row.rhs);
    }
    let psi_row = prog.psi.as_ref().map(|_| lp.add_row(psi_coeffs, Sense::Ge, psi_rhs));
    Built { lp, seg, z_col, psi_row }
}

fn check_terms(terms: &[Term]) -> Result<()> {
    for t in terms {
        if let Curve::Reward { kind, dist } = t.curve {
            let report = check_concavity(kind, &dist, 101);
            if !report.concave {
                return Err(Error::NonConcave { i: t.edge.0, j: t.edge.1, worst: report.worst_second_difference });
            }
        }
    }
    Ok(())
}

/// Solves the program to the configured relative gap.
pub fn concave_separable_maximize(prog: &SeparableProgram, config: &SolverConfig) -> Result<SeparableSolution> {
    config.check()?;
    check_terms(&prog.terms)?;
    if let Some((psi, _)) = &prog.psi {
        check_terms(psi)?;
    }
    let nv = prog.terms.len();
    let mut grids: Vec<Vec<f64>> = prog
        .terms
        .iter()
        .enumerate()
        .map(|(v, t)| {
            let linear = t.curve.is_linear() && prog.psi.as_ref().map_or(true, |(p, _)| p[v].curve.is_linear());
            if linear {
                vec![0.0, 1.0]
            } else {
                uniform_grid(config.breakpoints)
            }
        })
        .collect();
    let psi_rhs = prog.psi.as_ref().map_or(0.0, |(_, c)| *c);
    let opts = LpOptions::default();
    let mut pivots = 0;
    let mut best: Option<SeparableSolution> = None;
    let mut ub_min = f64::INFINITY;
    for round in 1..=config.max_rounds {
        let built = build_lp(prog, &grids, psi_rhs);
        let sol = lp_solve(&built.lp, &opts)?;
        pivots += sol.iterations;
        let q: Vec<f64> = built
            .seg
            .iter()
            .map(|&(start, count)| sol.x[start..start + count].iter().sum::<f64>().clamp(0.0, 1.0))
            .collect();
        let z: Vec<f64> = built.z_col.iter().map(|&c| sol.x[c]).collect();
        let value = prog.objective_at(&q, &z);
        // Lagrangian bound from the LP row duals.
        let mut ub = 0.0;
        let mut price = vec![0.0; nv];
        let mut zprice: Vec<f64> = prog.linear.iter().map(|l| l.cost).collect();
        for (r, row) in prog.rows.iter().enumerate() {
            let y = match row.sense {
                Sense::Le => sol.duals[r].max(0.0),
                Sense::Ge => sol.duals[r].min(0.0),
                Sense::Eq => sol.duals[r],
            };
            if y == 0.0 {
                continue;
            }
            ub += y * row.rhs;
            for &(var, a) in &row.coeffs {
                match var {
                    Var::Q(v) => price[v] += y * a,
                    Var::Z(k) => zprice[k] -= y * a,
                }
            }
        }
        let kappa = built.psi_row.map_or(0.0, |r| (-sol.duals[r]).max(0.0));
        ub -= kappa * psi_rhs;
        let mut argmax = vec![0.0; nv];
        for v in 0..nv {
            let term = prog.terms[v];
            let psi_term = prog.psi.as_ref().map(|(p, _)| p[v]);
            let s = price[v];
            let h = |x: f64| term.value(x) + psi_term.map_or(0.0, |p| kappa * p.value(x)) - s * x;
            let dh = |x: f64| {
                let a = if term.weight == 0.0 { 0.0 } else { term.weight * term.curve.slope(x) };
                let b = psi_term.map_or(0.0, |p| if kappa == 0.0 || p.weight == 0.0 { 0.0 } else { kappa * p.weight * p.curve.slope(x) });
                a + b - s
            };
            let (arg, _, bound) = maximize_concave_1d(h, dh);
            argmax[v] = arg;
            ub += bound;
        }
        for (k, l) in prog.linear.iter().enumerate() {
            ub += zprice[k].max(0.0) * l.upper;
        }
        // Every round's Lagrangian value is a valid bound; keep the tightest
        // bound and the best point seen so far.
        ub_min = ub_min.min(ub);
        if best.as_ref().map_or(true, |b| value > b.value) {
            best = Some(SeparableSolution {
                psi_value: prog.psi_at(&q),
                q,
                z,
                value,
                upper_bound: 0.0,
                gap: 0.0,
                converged: false,
                stats: SolverStats { rounds: 0, pivots: 0, max_breakpoints: 0 },
            });
        }
        let b = best.as_mut().expect("set above");
        b.upper_bound = ub_min.max(b.value);
        b.gap = b.upper_bound - b.value;
        b.converged = b.gap <= config.gap_tolerance * b.upper_bound.abs().max(1.0);
        b.stats = SolverStats { rounds: round, pivots, max_breakpoints: grids.iter().map(Vec::len).max().unwrap_or(0) };
        if b.converged {
            break;
        }
        // Refine: Lagrangian maximizers first, then uniform doubling.
        let mut changed = false;
        for v in 0..nv {
            if grids[v].len() == 2 && prog.terms[v].curve.is_linear() {
                continue;
            }
            if grids[v].len() < config.max_breakpoints {
                changed |= insert_point(&mut grids[v], argmax[v]);
            }
        }
        if !changed {
            for g in grids.iter_mut() {
                if g.len() > 2 && 2 * g.len() - 1 <= config.max_breakpoints {
                    let mids: Vec<f64> = g.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
                    g.extend(mids);
                    g.sort_by(f64::total_cmp);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut out = best.expect("at least one round");
    out.stats.pivots = pivots;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concave_1d_interior() {
        let (arg, val, ub) = maximize_concave_1d(|x| x * (1.0 - x), |x| 1.0 - 2.0 * x);
        assert!((arg - 0.5).abs() < 1e-12);
        assert!((val - 0.25).abs() < 1e-15 && ub >= val && ub - val < 1e-14);
    }

    #[test]
    fn concave_1d_corners() {
        assert_eq!(maximize_concave_1d(|x| x, |_| 1.0).0, 1.0);
        assert_eq!(maximize_concave_1d(|x| -x, |_| -1.0).0, 0.0);
    }
}
