//! `fleet verify --check <name>`.

use std::path::Path;

use clap::{Args, ValueEnum};
use fleet_core::model::{random_instance_seeded, RandomInstanceConfig};
use fleet_core::relax::{solve_efr_rate_limited, Variant};
use fleet_core::sim::SimConfig;
use fleet_core::verify::*;
use fleet_core::{Instance, QuantilePolicy, Rational, Units};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::output::{Sink, Table};
use crate::{load_policy, require_instance, CliError, SolverArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    ProductForm,
    Biregular,
    Monotonicity,
    TailBound,
    Nonconcavity,
    Tightness,
    Certificate,
    Bicriteria,
    DelayBound,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    check: Check,
    /// Relaxation used by the certificate check.
    #[arg(long, default_value = "efr")]
    variant: Variant,
    /// Epsilon values for the non-concavity check.
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.1, 0.01])]
    eps: Vec<f64>,
    /// Demand multipliers for the tightness check.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 10.0, 100.0, 1000.0])]
    k: Vec<f64>,
    /// Station count (tightness, biregular, certificate ring).
    #[arg(long)]
    n: Option<usize>,
    /// Fleet size (tightness, biregular, certificate ring).
    #[arg(long)]
    m: Option<u64>,
    /// Certificate on a bidirected ring of this many stations instead of
    /// --input.
    #[arg(long)]
    ring: Option<usize>,
    /// Largest Poisson mean in the tail-bound grid.
    #[arg(long, default_value_t = 50)]
    lambda_max: u32,
    /// Random instances for the monotonicity check when no input is given.
    #[arg(long, default_value_t = 10)]
    count: u64,
    /// Policy for the delay-bound check (default: the rate-limited
    /// relaxation's scaled quantiles).
    #[arg(long)]
    policy: Option<std::path::PathBuf>,
    /// Also simulate in the delay-bound check.
    #[arg(long)]
    sim: bool,
    #[arg(long, default_value_t = 1e4)]
    horizon: f64,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Serialize)]
struct Report {
    check: Check,
    passed: bool,
    details: Value,
}

fn value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn product_form() -> (bool, Value) {
    let results: Vec<ProductFormCheck> = product_form_suite().iter().map(check_product_form).collect();
    let passed = results.iter().all(|r| r.passed);
    (passed, json!({ "cases": results.len(), "results": results }))
}

fn biregular(args: &VerifyArgs) -> Result<(bool, Value), CliError> {
    let sizes: Vec<(usize, usize)> = match (args.n, args.m) {
        (Some(n), Some(m)) => vec![(n, m as usize)],
        _ => (1..=4).flat_map(|n| (1..=6).map(move |m| (n, m))).collect(),
    };
    let mut rows = Vec::new();
    let mut passed = true;
    for (n, m) in sizes {
        let g = build_biregular_graph::<Rational>(n, m)?;
        let right = Rational::new((m + n - 1) as i128, m as i128);
        let ok = g.upper_sums.iter().all(|&v| v == Rational::from_integer(1)) && g.lower_sums.iter().all(|&v| v == right);
        passed &= ok;
        rows.push(json!({ "n": n, "m": m, "upper_states": g.upper.len(), "lower_states": g.lower.len(), "edges": g.edges.len(), "passed": ok }));
    }
    Ok((passed, json!({ "sizes": rows })))
}

fn monotonicity(input: Option<&Path>, seed: u64, args: &VerifyArgs) -> Result<(bool, Value), CliError> {
    let instances: Vec<Instance> = match input {
        Some(p) => vec![require_instance(Some(p))?],
        None => (0..args.count).map(|k| random_instance_seeded(seed + k, &RandomInstanceConfig::default())).collect(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut passed = true;
    for inst in &instances {
        let q: Vec<f64> = (0..inst.n).map(|_| rng.gen_range(0.1..0.7)).collect();
        let mut q2 = q.clone();
        let k = rng.gen_range(0..inst.n);
        q2[k] = rng.gen_range(q[k]..=1.0);
        let r = check_flow_monotonicity(inst, &q, &q2)?;
        passed &= r.monotone;
        rows.push(json!({ "n": inst.n, "q": q, "q_raised": q2, "report": r }));
    }
    Ok((passed, json!({ "instances": rows })))
}

fn tail(args: &VerifyArgs) -> (bool, Value) {
    let v = tail_bound_violations(args.lambda_max);
    let rows: Vec<Value> = v.iter().map(|&(l, x, b, e)| json!({ "lambda": l, "x": x, "bound": b, "exact": e })).collect();
    (v.is_empty(), json!({ "grid_points": 5 * args.lambda_max, "violations": rows }))
}

fn nonconcavity(args: &VerifyArgs) -> Result<(bool, Value), CliError> {
    let reports = args.eps.iter().map(|&e| nonconcavity_demo(e)).collect::<Result<Vec<_>, _>>()?;
    let passed = reports.iter().all(|r| r.formulas_match);
    Ok((passed, json!({ "reports": reports })))
}

/// Tightness reports over k, with the checks shared by the experiment.
pub fn tightness_reports(n: usize, m: u64, ks: &[f64]) -> Result<(bool, Vec<TightnessReport>), CliError> {
    let reports = ks.iter().map(|&k| tightness_demo(n, m, k)).collect::<Result<Vec<_>, _>>()?;
    let exact = reports.iter().all(|r| (r.algorithm_value - r.closed_form).abs() <= 1e-9 * r.closed_form.max(1.0));
    let above = reports.iter().all(|r| r.ratio >= r.guarantee - 1e-12);
    let monotone = reports.windows(2).all(|w| w[0].k > w[1].k || w[1].ratio <= w[0].ratio + 1e-12);
    Ok((exact && above && monotone, reports))
}

fn certificate(input: Option<&Path>, args: &VerifyArgs) -> Result<(bool, Value), CliError> {
    let instance = match args.ring {
        Some(n) => ring_instance(n, args.m.unwrap_or(10_000)),
        None => {
            let mut i = require_instance(input)?;
            if let Some(m) = args.m {
                i.m = Units::Finite(m);
            }
            i
        }
    };
    let r = approximation_certificate(&instance, args.variant, &args.solver.config())?;
    Ok((r.passed, value(&r)))
}

fn delay_bound(input: Option<&Path>, seed: u64, args: &VerifyArgs) -> Result<(bool, Value), CliError> {
    let mut instance = match input {
        Some(p) => require_instance(Some(p))?,
        None => symmetric_delay_instance(3, 100, 5.0),
    };
    if let Some(m) = args.m {
        instance.m = Units::Finite(m);
    }
    let policy = match &args.policy {
        Some(p) => load_policy(p, &instance)?,
        None => {
            let sol = solve_efr_rate_limited(&instance, &args.solver.config())?;
            QuantilePolicy::new(sol.scaled_q.expect("rate-limited solutions carry scaled quantiles"))
        }
    };
    let sim = args.sim.then(|| SimConfig { seed, horizon: args.horizon, replications: args.reps, ..SimConfig::default() });
    let r = delay_bound_check(&instance, &policy, sim.as_ref())?;
    Ok((r.passed, value(&r)))
}

pub fn run(input: Option<&Path>, seed: u64, args: &VerifyArgs, sink: &Sink) -> Result<(), CliError> {
    let (passed, details) = match args.check {
        Check::ProductForm => product_form(),
        Check::Biregular => biregular(args)?,
        Check::Monotonicity => monotonicity(input, seed, args)?,
        Check::TailBound => tail(args),
        Check::Nonconcavity => nonconcavity(args)?,
        Check::Tightness => {
            let (ok, reports) = tightness_reports(args.n.unwrap_or(3), args.m.unwrap_or(2), &args.k)?;
            (ok, json!({ "reports": reports }))
        }
        Check::Certificate => certificate(input, args)?,
        Check::Bicriteria => {
            let r = bicriteria_check(&require_instance(input)?, &args.solver.config())?;
            (r.passed, value(&r))
        }
        Check::DelayBound => delay_bound(input, seed, args)?,
    };
    let report = Report { check: args.check, passed, details };
    sink.emit(&report, || {
        let mut t = Table::new(&["check", "passed"]);
        t.push(vec![value(&args.check).as_str().unwrap_or_default().to_string(), passed.to_string()]);
        t
    })?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Failed(format!("{:?}", args.check)))
    }
}
