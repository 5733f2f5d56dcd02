//! Guarantee checks against exact steady-state values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gordon_newell::steady_state_summary;
use crate::matrix::Matrix;
use crate::model::{Instance, QuantilePolicy, RewardKind, Units, ValueDistribution};
use crate::policy::{demand_circulation_check, prices_from_relaxation};
use crate::relax::{solve, solve_efr_multiobjective, SolverConfig, Variant};
use crate::sim::{simulate, SimConfig, SimPolicy};

/// m / (m + n - 1).
pub fn guarantee(n: usize, m: u64) -> f64 {
    m as f64 / (m as f64 + n as f64 - 1.0)
}

fn finite_m(instance: &Instance) -> Result<u64> {
    instance.m.finite().ok_or_else(|| Error::Precondition("certificate needs a finite fleet".into()))
}

/// Relative gap used for certificates: the ratio divides by the upper bound,
/// so the bound has to sit well inside the 1e-9 check tolerance.
pub const CERTIFICATE_GAP: f64 = 1e-10;

fn obj_m(instance: &Instance, policy: &QuantilePolicy) -> Result<f64> {
    Ok(steady_state_summary(instance, policy, instance.m)?.obj_m.expect("finite fleet"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub variant: Variant,
    pub n: usize,
    pub m: u64,
    /// Relaxation objective at the returned point.
    pub elevated: f64,
    /// Certified upper bound on the relaxation optimum.
    pub upper_bound: f64,
    pub obj_m: f64,
    /// obj_m / upper_bound.
    pub ratio: f64,
    /// m / (m + n - 1).
    pub threshold: f64,
    /// (m + n - 1) / m.
    pub approximation_ratio: f64,
    /// Whether the policy's customer flows form a circulation (then
    /// obj_m = threshold * elevated exactly).
    pub circulation: bool,
    pub passed: bool,
}

/// Solves a relaxation, evaluates its policy exactly and checks
/// obj_m >= m / (m + n - 1) times the relaxation's certified upper bound.
pub fn approximation_certificate(instance: &Instance, variant: Variant, config: &SolverConfig) -> Result<CertificateReport> {
    if matches!(variant, Variant::RateLimited | Variant::NopriceRateLimited) {
        return Err(Error::Unsupported(format!("certificate for variant {variant}; use the delay bound check")));
    }
    let m = finite_m(instance)?;
    let config = SolverConfig { gap_tolerance: config.gap_tolerance.min(CERTIFICATE_GAP), ..*config };
    let sol = solve(instance, variant, &config)?;
    let (_, policy) = prices_from_relaxation(instance, &sol)?;
    let value = obj_m(instance, &policy)?;
    let threshold = guarantee(instance.n, m);
    let circulation = policy.redirect.is_none()
        && policy.matching.is_none()
        && demand_circulation_check(instance, &policy.q, 1e-9).balanced;
    let elevated = sol.value;
    let bound = sol.upper_bound;
    let (ratio, mut passed) = if bound > 1e-15 {
        let ratio = value / bound;
        (ratio, ratio >= threshold - 1e-9)
    } else {
        (1.0, value >= -1e-12)
    };
    if circulation {
        passed &= (value - threshold * elevated).abs() <= 1e-8 * elevated.abs().max(1.0);
    }
    Ok(CertificateReport {
        variant,
        n: instance.n,
        m,
        elevated,
        upper_bound: sol.upper_bound,
        obj_m: value,
        ratio,
        threshold,
        approximation_ratio: 1.0 / threshold,
        circulation,
        passed,
    })
}

/// Bidirected ring of n stations with unit rates and Uniform(0, 1) values,
/// revenue objective.
pub fn ring_instance(n: usize, m: u64) -> Instance {
    let mut d = Matrix::zeros(n, n);
    for i in 0..n {
        d[(i, (i + 1) % n)] = 1.0;
        d[((i + 1) % n, i)] = 1.0;
    }
    Instance::uniform_dist(Units::Finite(m), RewardKind::Revenue, d, ValueDistribution::Uniform { a: 0.0, b: 1.0 })
}

/// Complete graph on n stations with unit rates, Uniform(0, 1) values and
/// travel time tau on every pair, throughput objective.
pub fn symmetric_delay_instance(n: usize, m: u64, tau: f64) -> Instance {
    let d = Matrix::from_fn(n, n, |i, j| if i != j { 1.0 } else { 0.0 });
    let mut inst =
        Instance::uniform_dist(Units::Finite(m), RewardKind::Throughput, d, ValueDistribution::Uniform { a: 0.0, b: 1.0 });
    inst.travel_time = Some(Matrix::from_fn(n, n, |i, j| if i != j { tau } else { 0.0 }));
    inst
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BicriteriaReport {
    pub gamma: f64,
    pub requirement: f64,
    pub relaxation_value: f64,
    pub primary_m: f64,
    pub secondary_m: f64,
    pub primary_ok: bool,
    pub secondary_ok: bool,
    pub passed: bool,
}

/// Primary objective >= gamma * relaxation value and secondary objective
/// >= gamma * requirement for the multi-objective relaxation's policy.
pub fn bicriteria_check(instance: &Instance, config: &SolverConfig) -> Result<BicriteriaReport> {
    let m = finite_m(instance)?;
    let mo = instance.multi_objective.ok_or_else(|| Error::Precondition("instance has no multi_objective".into()))?;
    let sol = solve_efr_multiobjective(instance, config)?;
    let policy = QuantilePolicy::new(sol.q.clone());
    let primary_m = obj_m(instance, &policy)?;
    let mut secondary = instance.clone();
    secondary.objective = mo.kind;
    let secondary_m = obj_m(&secondary, &policy)?;
    let gamma = guarantee(instance.n, m);
    let primary_ok = primary_m >= gamma * sol.value - 1e-8;
    let secondary_ok = secondary_m >= gamma * mo.requirement - 1e-8;
    Ok(BicriteriaReport {
        gamma,
        requirement: mo.requirement,
        relaxation_value: sol.value,
        primary_m,
        secondary_m,
        primary_ok,
        secondary_ok,
        passed: primary_ok && secondary_ok,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayBoundReport {
    pub n: usize,
    pub m: u64,
    /// sum phi tau q.
    pub load: f64,
    /// m - 2 sqrt(m ln m).
    pub load_limit: f64,
    /// (1 - 3 / sqrt m) * sqrt(m ln m) / (sqrt(m ln m) + n - 1).
    pub bound: f64,
    pub exact_max_availability: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulated_max_availability: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    pub passed: bool,
}

/// Lower bound on the largest availability when the travel load leaves
/// 2 sqrt(m ln m) units of slack (m >= 100).
pub fn delay_bound_check(instance: &Instance, policy: &QuantilePolicy, sim: Option<&SimConfig>) -> Result<DelayBoundReport> {
    let m = finite_m(instance)?;
    if m < 100 {
        return Err(Error::Precondition(format!("delay bound needs m >= 100, got {m}")));
    }
    let tau = instance.travel_time.as_ref().ok_or_else(|| Error::Precondition("instance has no travel times".into()))?;
    let load: f64 = instance.edges().into_iter().map(|(i, j)| instance.phi(i, j) * tau[(i, j)] * policy.q[(i, j)]).sum();
    let mf = m as f64;
    let s = (mf * mf.ln()).sqrt();
    let load_limit = mf - 2.0 * s;
    let bound = (1.0 - 3.0 / mf.sqrt()) * s / (s + instance.n as f64 - 1.0);
    let summary = steady_state_summary(instance, policy, instance.m)?;
    let exact = summary.max_availability();
    let mut passed = load <= load_limit && exact >= bound;
    let (mut sim_max, mut hw) = (None, None);
    if let Some(cfg) = sim {
        let r = simulate(instance, SimPolicy::Static(policy), cfg)?;
        let (k, &a) = r.availabilities.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("stations");
        let h = r.availability_half_width[k];
        passed &= a >= bound - if h.is_nan() { 0.0 } else { h };
        sim_max = Some(a);
        hw = Some(h);
    }
    Ok(DelayBoundReport {
        n: instance.n,
        m,
        load,
        load_limit,
        bound,
        exact_max_availability: exact,
        simulated_max_availability: sim_max,
        half_width: hw,
        passed,
    })
}
