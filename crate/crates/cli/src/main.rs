//! `fleet`: analytics, relaxations, policies, simulation and checks for
//! shared-vehicle networks.

mod experiment;
mod output;
mod verify_cmd;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fleet_core::gordon_newell::steady_state_summary;
use fleet_core::model::{load_instance, quantile_to_price};
use fleet_core::policy::{
    connectivity_repair, demand_circulation_check, prices_from_relaxation, round_to_discrete_grid, CirculationReport,
    DiscreteGridReport, PricePolicy, RepairReport,
};
use fleet_core::relax::{origin_distributions, solve, RelaxSolution, SolverConfig, Variant};
use fleet_core::sim::{simulate, MatchingRule, SimConfig, SimPolicy};
use fleet_core::{Error, Instance, QuantilePolicy, Units};
use serde::Serialize;

use output::{num, Format, Sink, Table};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable files, invalid instances or policies that the
    /// library rejects.
    Input(String),
    /// A check ran and did not pass.
    Failed(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInstance(diags) => CliError::Input(
                diags.iter().map(|d| format!("{}: {}: {}", d.pointer, d.code.label(), d.message)).collect::<Vec<_>>().join("\n"),
            ),
            other => CliError::Input(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "fleet", version, about = "Pricing and rebalancing analytics for shared-vehicle networks")]
struct Cli {
    /// Instance JSON file.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Result file (stdout when omitted).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact steady-state summary of a policy.
    Analyze(AnalyzeArgs),
    /// Solve a flow relaxation.
    Solve(SolveArgs),
    /// Turn a relaxation into prices and a quantile policy.
    ExtractPolicy(ExtractArgs),
    /// Discrete-event simulation of a policy.
    Simulate(SimulateArgs),
    /// Run a named check and print a pass/fail report.
    Verify(verify_cmd::VerifyArgs),
    /// Run a named experiment and write one CSV row per configuration.
    Experiment(experiment::ExperimentArgs),
}

#[derive(Args, Clone)]
pub struct SolverArgs {
    /// Initial breakpoints per concave term.
    #[arg(long, default_value_t = 64)]
    breakpoints: usize,
    #[arg(long, default_value_t = 1024)]
    max_breakpoints: usize,
    /// Relative optimality gap.
    #[arg(long, default_value_t = 1e-6)]
    gap: f64,
}

impl SolverArgs {
    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            breakpoints: self.breakpoints,
            max_breakpoints: self.max_breakpoints,
            gap_tolerance: self.gap,
            ..SolverConfig::default()
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Policy JSON: a quantile policy or an extract-policy output.
    #[arg(long)]
    policy: Option<PathBuf>,
    /// Constant quantile on every edge when no policy file is given.
    #[arg(long, default_value_t = 1.0)]
    quantile: f64,
    /// Override the fleet size (integer or "inf").
    #[arg(long)]
    m: Option<String>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, default_value = "efr")]
    variant: Variant,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long, default_value = "efr")]
    variant: Variant,
    /// Use a saved relaxation instead of solving.
    #[arg(long)]
    relaxation: Option<PathBuf>,
    /// Round point prices up to the instance's price grid.
    #[arg(long)]
    grid: bool,
    /// Make the policy's demand support strongly connected, losing at most
    /// this fraction of the objective.
    #[arg(long)]
    repair: Option<f64>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Designated,
    Fallback,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    quantile: f64,
    #[arg(long, default_value_t = 1e4)]
    horizon: f64,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = 0.2)]
    warmup: f64,
    #[arg(long, value_enum, default_value_t = RuleArg::Designated)]
    matching_rule: RuleArg,
    /// Record time-average state frequencies.
    #[arg(long)]
    occupancy: bool,
    /// Also write per-edge flows with half-widths as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

pub fn require_instance(path: Option<&Path>) -> Result<Instance, CliError> {
    let path = path.ok_or_else(|| CliError::Input("--input is required".into()))?;
    Ok(load_instance(path)?)
}

/// Reads a bare quantile policy or the `policy` field of an extract-policy
/// result.
pub fn load_policy(path: &Path, instance: &Instance) -> Result<QuantilePolicy, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if let Some(inner) = value.get_mut("policy") {
        value = inner.take();
    }
    let policy: QuantilePolicy =
        serde_json::from_value(value).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    policy.check(instance)?;
    Ok(policy)
}

fn policy_or_constant(path: Option<&Path>, q: f64, instance: &Instance) -> Result<QuantilePolicy, CliError> {
    match path {
        Some(p) => load_policy(p, instance),
        None => {
            if !(0.0..=1.0).contains(&q) {
                return Err(CliError::Input(format!("--quantile {q} outside [0, 1]")));
            }
            Ok(QuantilePolicy::constant(instance, q))
        }
    }
}

fn parse_units(s: &str) -> Result<Units, CliError> {
    if s == "inf" {
        return Ok(Units::Infinite);
    }
    s.parse().map(Units::Finite).map_err(|_| CliError::Input(format!("--m expects an integer or \"inf\", got {s:?}")))
}

fn edge_table(instance: &Instance, cols: &[&str], f: impl Fn(usize, usize) -> Vec<String>) -> Table {
    let mut headers = vec!["from", "to"];
    headers.extend_from_slice(cols);
    let mut t = Table::new(&headers);
    for (i, j) in instance.edges() {
        let mut row = vec![i.to_string(), j.to_string()];
        row.extend(f(i, j));
        t.push(row);
    }
    t
}

fn analyze(cli: &Cli, args: &AnalyzeArgs, sink: &Sink) -> Result<(), CliError> {
    let instance = require_instance(cli.input.as_deref())?;
    let policy = policy_or_constant(args.policy.as_deref(), args.quantile, &instance)?;
    let m = match &args.m {
        Some(s) => parse_units(s)?,
        None => instance.m,
    };
    let s = steady_state_summary(&instance, &policy, m)?;
    sink.emit(&s, || {
        let mut t = Table::new(&["node", "w", "mu", "r", "availability", "infinite_availability", "contribution"]);
        for k in 0..instance.n {
            t.push(vec![
                k.to_string(),
                num(s.w[k]),
                num(s.mu[k]),
                num(s.r[k]),
                num(s.availabilities[k]),
                num(s.infinite_availabilities[k]),
                num(s.contributions[k]),
            ]);
        }
        t
    })
}

fn solve_cmd(cli: &Cli, args: &SolveArgs, sink: &Sink) -> Result<(), CliError> {
    let instance = require_instance(cli.input.as_deref())?;
    let sol = solve(&instance, args.variant, &args.solver.config())?;
    sink.emit(&sol, || {
        edge_table(&instance, &["q", "z"], |i, j| vec![num(sol.q[(i, j)]), sol.z.as_ref().map(|z| num(z[(i, j)])).unwrap_or_default()])
    })
}

#[derive(Serialize)]
struct ExtractOutput {
    prices: PricePolicy,
    policy: QuantilePolicy,
    relaxation_value: f64,
    circulation: CirculationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    repair: Option<RepairReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<DiscreteGridReport>,
    /// Per-origin quantiles after grid rounding.
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_policy: Option<QuantilePolicy>,
}

fn extract(cli: &Cli, args: &ExtractArgs, sink: &Sink) -> Result<(), CliError> {
    let instance = require_instance(cli.input.as_deref())?;
    let sol: RelaxSolution = match &args.relaxation {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?
        }
        None => solve(&instance, args.variant, &args.solver.config())?,
    };
    let (mut prices, mut policy) = prices_from_relaxation(&instance, &sol)?;
    let repair = match args.repair {
        Some(eps) => {
            let report = connectivity_repair(&instance, &policy.q, eps)?;
            policy.q = report.q.clone();
            let variant = prices.variant;
            prices = PricePolicy { variant, relaxation_value: Some(sol.value), ..PricePolicy::from_quantiles(&instance, &policy.q)? };
            Some(report)
        }
        None => None,
    };
    let (grid, grid_policy) = if args.grid {
        let point_q = sol
            .point_q
            .as_ref()
            .ok_or_else(|| CliError::Input("--grid needs a point-pricing relaxation (--variant point)".into()))?;
        let dists = origin_distributions(&instance)?;
        let point_prices = point_q.iter().zip(&dists).map(|(&q, d)| quantile_to_price(d, q)).collect::<Result<Vec<_>, _>>()?;
        let report = round_to_discrete_grid(&instance, &point_prices)?;
        let gp = QuantilePolicy::from_point(&instance, &report.rounded_quantiles);
        (Some(report), Some(gp))
    } else {
        (None, None)
    };
    let circulation = demand_circulation_check(&instance, &policy.q, 1e-9);
    let out = ExtractOutput { prices, policy, relaxation_value: sol.value, circulation, repair, grid, grid_policy };
    sink.emit(&out, || {
        edge_table(&instance, &["price", "q"], |i, j| vec![output::opt(out.prices.prices[(i, j)]), num(out.policy.q[(i, j)])])
    })
}

fn simulate_cmd(cli: &Cli, args: &SimulateArgs, sink: &Sink) -> Result<(), CliError> {
    let instance = require_instance(cli.input.as_deref())?;
    let policy = policy_or_constant(args.policy.as_deref(), args.quantile, &instance)?;
    let config = SimConfig {
        seed: cli.seed,
        horizon: args.horizon,
        warmup: args.warmup,
        replications: args.reps,
        matching_rule: match args.matching_rule {
            RuleArg::Designated => MatchingRule::Designated,
            RuleArg::Fallback => MatchingRule::Fallback,
        },
        track_occupancy: args.occupancy,
    };
    let r = simulate(&instance, SimPolicy::Static(&policy), &config)?;
    let table = || edge_table(&instance, &["flow", "half_width"], |i, j| vec![num(r.flows[(i, j)]), num(r.flow_half_width[(i, j)])]);
    if let Some(p) = &args.csv {
        output::write_text(Some(p), &table().to_csv()?)?;
    }
    sink.emit(&r, table)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let sink = Sink { path: cli.output.clone(), format: cli.format };
    match &cli.command {
        Command::Analyze(a) => analyze(cli, a, &sink),
        Command::Solve(a) => solve_cmd(cli, a, &sink),
        Command::ExtractPolicy(a) => extract(cli, a, &sink),
        Command::Simulate(a) => simulate_cmd(cli, a, &sink),
        Command::Verify(a) => verify_cmd::run(cli.input.as_deref(), cli.seed, a, &sink),
        Command::Experiment(a) => experiment::run(cli.input.as_deref(), cli.output.as_deref(), cli.seed, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Failed(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
