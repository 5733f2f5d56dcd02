//! Dense bounded-variable primal simplex.
//!
//! Every row carries an artificial column, so the tableau always contains
//! B^{-1} and row duals come out directly. Pricing is Dantzig's rule, with a
//! switch to Bland's lowest-index rule during degenerate stalls; ratio-test
//! ties go to the lowest variable index.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// maximize c x subject to rows and lower <= x <= upper.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        self.constraints.push(Constraint { coeffs, sense, rhs });
        self.constraints.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Largest violation of rows and bounds at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let d = lhs - c.rhs;
            worst = worst.max(match c.sense {
                Sense::Le => d,
                Sense::Ge => -d,
                Sense::Eq => d.abs(),
            });
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOptions {
    pub pivot_tol: f64,
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    /// Among optimal solutions, move to one minimizing the sum of the
    /// structural variables.
    pub tie_break: bool,
    pub max_iterations: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions { pivot_tol: 1e-9, feasibility_tol: 1e-9, optimality_tol: 1e-10, tie_break: true, max_iterations: 200_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    /// Row duals: >= 0 on <= rows, <= 0 on >= rows (maximization).
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

struct Tableau {
    rows: usize,
    cols: usize,
    t: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    at_upper: Vec<bool>,
    upper: Vec<f64>,
    frozen: Vec<bool>,
    d: Vec<f64>,
    iterations: usize,
}

enum Step {
    Optimal,
    Moved,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * self.cols + c]
    }

    fn value_of_nonbasic(&self, j: usize) -> f64 {
        if self.at_upper[j] {
            self.upper[j]
        } else {
            0.0
        }
    }

    fn reprice(&mut self, cost: &[f64]) {
        for j in 0..self.cols {
            let mut v = cost[j];
            for r in 0..self.rows {
                let a = self.at(r, j);
                if a != 0.0 {
                    v -= cost[self.basis[r]] * a;
                }
            }
            self.d[j] = if self.is_basic[j] { 0.0 } else { v };
        }
    }

    fn pivot(&mut self, pr: usize, e: usize, entering_value: f64, leaving_to_upper: bool) {
        let cols = self.cols;
        let piv = self.at(pr, e);
        for c in 0..cols {
            self.t[pr * cols + c] /= piv;
        }
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.at(r, e);
            if f != 0.0 {
                for c in 0..cols {
                    let v = self.t[pr * cols + c];
                    if v != 0.0 {
                        self.t[r * cols + c] -= f * v;
                    }
                }
                self.t[r * cols + e] = 0.0;
            }
        }
        let de = self.d[e];
        if de != 0.0 {
            for c in 0..cols {
                let v = self.t[pr * cols + c];
                if v != 0.0 {
                    self.d[c] -= de * v;
                }
            }
        }
        self.d[e] = 0.0;
        let leaving = self.basis[pr];
        self.is_basic[leaving] = false;
        self.at_upper[leaving] = leaving_to_upper;
        self.is_basic[e] = true;
        self.at_upper[e] = false;
        self.basis[pr] = e;
        self.beta[pr] = entering_value;
    }

    fn step(&mut self, opts: &LpOptions, bland: bool) -> Result<(Step, bool)> {
        let tol = opts.optimality_tol;
        let mut entering = None;
        let mut best = 0.0;
        for j in 0..self.cols {
            if self.is_basic[j] || self.frozen[j] || self.upper[j] <= 0.0 {
                continue;
            }
            let dj = self.d[j];
            let gain = if self.at_upper[j] { -dj } else { dj };
            if gain > tol {
                if bland {
                    entering = Some(j);
                    break;
                }
                if gain > best {
                    best = gain;
                    entering = Some(j);
                }
            }
        }
        let Some(e) = entering else { return Ok((Step::Optimal, false)) };
        let dir = if self.at_upper[e] { -1.0 } else { 1.0 };
        let mut t_min = self.upper[e];
        let mut leave: Option<(usize, bool)> = None;
        for r in 0..self.rows {
            let alpha = dir * self.at(r, e);
            let (limit, to_upper) = if alpha > opts.pivot_tol {
                (self.beta[r].max(0.0) / alpha, false)
            } else if alpha < -opts.pivot_tol {
                let ub = self.upper[self.basis[r]];
                if !ub.is_finite() {
                    continue;
                }
                ((ub - self.beta[r]).max(0.0) / -alpha, true)
            } else {
                continue;
            };
            if limit < t_min - 1e-12 {
                t_min = limit;
                leave = Some((r, to_upper));
            } else if limit <= t_min + 1e-12 {
                // Ties: a bound flip wins, then the lowest basic index.
                if let Some((lr, _)) = leave {
                    if self.basis[r] < self.basis[lr] {
                        t_min = t_min.min(limit);
                        leave = Some((r, to_upper));
                    }
                }
            }
        }
        if !t_min.is_finite() {
            return Err(Error::Unbounded { column: e });
        }
        let degenerate = t_min <= 1e-12;
        for r in 0..self.rows {
            let a = self.at(r, e);
            if a != 0.0 {
                self.beta[r] -= dir * t_min * a;
            }
        }
        match leave {
            None => {
                self.at_upper[e] = !self.at_upper[e];
            }
            Some((pr, to_upper)) => {
                let start = self.value_of_nonbasic(e);
                let value = start + dir * t_min;
                self.pivot(pr, e, value, to_upper);
            }
        }
        self.iterations += 1;
        Ok((Step::Moved, degenerate))
    }

    fn optimize(&mut self, opts: &LpOptions) -> Result<()> {
        let mut stall = 0usize;
        loop {
            if self.iterations >= opts.max_iterations {
                return Err(Error::IterationLimit(opts.max_iterations));
            }
            let (step, degenerate) = self.step(opts, stall > 50)?;
            match step {
                Step::Optimal => return Ok(()),
                Step::Moved => stall = if degenerate { stall + 1 } else { 0 },
            }
        }
    }
}

/// Solves the program to optimality.
pub fn lp_solve(lp: &LinearProgram, opts: &LpOptions) -> Result<LpSolution> {
    let n = lp.num_vars();
    let m = lp.constraints.len();
    for j in 0..n {
        if !(lp.lower[j].is_finite() && lp.upper[j] >= lp.lower[j]) {
            return Err(Error::Domain(format!("variable {j} needs a finite lower bound below its upper bound")));
        }
    }
    let cols = n + 2 * m;
    let mut t = vec![0.0; m * cols];
    let mut beta = vec![0.0; m];
    let mut sign = vec![1.0; m];
    let mut upper = vec![f64::INFINITY; cols];
    for j in 0..n {
        upper[j] = lp.upper[j] - lp.lower[j];
    }
    for (r, c) in lp.constraints.iter().enumerate() {
        let mut rhs = c.rhs;
        for &(j, a) in &c.coeffs {
            t[r * cols + j] += a;
            rhs -= a * lp.lower[j];
        }
        match c.sense {
            Sense::Le => t[r * cols + n + r] = 1.0,
            Sense::Ge => t[r * cols + n + r] = -1.0,
            Sense::Eq => upper[n + r] = 0.0,
        }
        if rhs < 0.0 {
            sign[r] = -1.0;
            for v in &mut t[r * cols..r * cols + n + m] {
                *v = -*v;
            }
            rhs = -rhs;
        }
        t[r * cols + n + m + r] = 1.0;
        beta[r] = rhs;
    }
    let mut tab = Tableau {
        rows: m,
        cols,
        t,
        beta,
        basis: (0..m).map(|r| n + m + r).collect(),
        is_basic: (0..cols).map(|j| j >= n + m).collect(),
        at_upper: vec![false; cols],
        upper,
        frozen: vec![false; cols],
        d: vec![0.0; cols],
        iterations: 0,
    };
    // Phase 1: minimize the artificial sum.
    let mut cost1 = vec![0.0; cols];
    for c in &mut cost1[n + m..] {
        *c = -1.0;
    }
    tab.reprice(&cost1);
    tab.optimize(opts)?;
    let scale = 1.0 + lp.constraints.iter().map(|c| c.rhs.abs()).fold(0.0, f64::max);
    let infeasible: Vec<usize> = (0..m)
        .filter(|&r| {
            let a = n + m + r;
            let v = if tab.is_basic[a] { tab.beta[tab.basis.iter().position(|&b| b == a).unwrap()] } else { tab.value_of_nonbasic(a) };
            v > opts.feasibility_tol * scale
        })
        .collect();
    if !infeasible.is_empty() {
        return Err(Error::Infeasible { rows: infeasible });
    }
    // Drive remaining artificials out of the basis where possible.
    for r in 0..m {
        if tab.basis[r] < n + m {
            continue;
        }
        if let Some(e) = (0..n + m).find(|&j| !tab.is_basic[j] && tab.at(r, j).abs() > opts.pivot_tol) {
            let v = tab.value_of_nonbasic(e);
            tab.pivot(r, e, v, false);
        }
    }
    for a in n + m..cols {
        tab.upper[a] = 0.0;
        if !tab.is_basic[a] {
            tab.at_upper[a] = false;
        }
    }
    // Phase 2.
    let mut cost2 = vec![0.0; cols];
    cost2[..n].copy_from_slice(&lp.objective);
    tab.reprice(&cost2);
    tab.optimize(opts)?;
    let duals: Vec<f64> = (0..m).map(|r| -sign[r] * tab.d[n + m + r]).collect();
    let reduced_costs = tab.d[..n].to_vec();
    if opts.tie_break {
        let dmax = tab.d.iter().map(|v| v.abs()).fold(1.0, f64::max);
        for j in 0..cols {
            if !tab.is_basic[j] && tab.d[j].abs() > opts.optimality_tol * dmax * 10.0 {
                tab.frozen[j] = true;
            }
        }
        let mut cost3 = vec![0.0; cols];
        for c in &mut cost3[..n] {
            *c = -1.0;
        }
        tab.reprice(&cost3);
        tab.optimize(opts)?;
    }
    let mut xs = vec![0.0; cols];
    for j in 0..cols {
        if !tab.is_basic[j] {
            xs[j] = tab.value_of_nonbasic(j);
        }
    }
    for r in 0..m {
        xs[tab.basis[r]] = tab.beta[r];
    }
    let x: Vec<f64> = (0..n).map(|j| (xs[j] + lp.lower[j]).clamp(lp.lower[j], lp.upper[j])).collect();
    let value = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
    Ok(LpSolution { x, value, duals, reduced_costs, iterations: tab.iterations })
}
