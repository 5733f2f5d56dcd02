//! Acceptance suite: one line per criterion, nonzero exit on any failure.
//!
//! Run with `cargo test -p fleet-core --test acceptance --release`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use fleet_core::gordon_newell::steady_state_summary;
use fleet_core::model::{random_instance_seeded, RandomInstanceConfig};
use fleet_core::policy::prices_from_relaxation;
use fleet_core::relax::{solve, solve_efr, solve_efr_rate_limited, SolverConfig, Variant};
use fleet_core::sim::{simulate, SimConfig, SimPolicy};
use fleet_core::verify::*;
use fleet_core::{Matrix, QuantilePolicy, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

fn c1_product_form() -> Outcome {
    let cases = product_form_suite();
    if cases.len() < 30 {
        return Err(format!("only {} cases", cases.len()));
    }
    let mut worst: f64 = 0.0;
    for c in &cases {
        let r = check_product_form(c);
        if !r.passed {
            return Err(format!("{}: diff {:.3e} {:?}", r.name, r.max_abs_diff, r.error));
        }
        worst = worst.max(r.max_abs_diff);
    }
    Ok(format!("{} cases, max diff {worst:.2e}", cases.len()))
}

fn c2_nonconcavity() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for eps in [0.5, 0.1, 0.01] {
        let r = nonconcavity_demo(eps).map_err(|e| e.to_string())?;
        let forms = r.return_times.iter().zip(&r.closed_forms).all(|(a, b)| (a - b).abs() <= 1e-9);
        let t = r.throughputs;
        let strict = t[1] < 0.5 * (t[0] + t[2]);
        ok &= forms && strict;
        notes.push(format!("eps={eps}: forms {forms}, II {:.12} vs mean {:.12}", t[1], 0.5 * (t[0] + t[2])));
    }
    let msg = notes.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c3_ratio_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for seed in 0..100 {
        let i = random_instance_seeded(seed, &RandomInstanceConfig::default());
        let q = Matrix::from_fn(i.n, i.n, |a, b| if i.phi(a, b) > 0.0 { rng.gen_range(0.05..1.0) } else { 0.0 });
        let s = steady_state_summary(&i, &QuantilePolicy::new(q), i.m).map_err(|e| e.to_string())?;
        let amax = s.max_availability();
        let rmax = s.r.iter().copied().fold(0.0, f64::max);
        let ratio = rmax * s.g_ratio.ok_or("missing G ratio")?;
        if !rel_close(ratio, amax, 1e-9) {
            return Err(format!("seed {seed}: r_max G ratio {ratio} vs {amax}"));
        }
        if !rel_close(s.obj_m.unwrap() / s.obj_inf, amax, 1e-9) {
            return Err(format!("seed {seed}: obj ratio {} vs {amax}", s.obj_m.unwrap() / s.obj_inf));
        }
    }
    Ok("100 instances".into())
}

fn c4_circulation() -> Outcome {
    let cfg = SolverConfig::default();
    let mut checked = 0;
    for seed in 0..100 {
        let i = random_instance_seeded(seed, &RandomInstanceConfig::default());
        let sol = solve_efr(&i, &cfg).map_err(|e| e.to_string())?;
        let (_, policy) = prices_from_relaxation(&i, &sol).map_err(|e| e.to_string())?;
        let s = steady_state_summary(&i, &policy, i.m).map_err(|e| e.to_string())?;
        let m = i.m.finite().unwrap();
        let gamma = guarantee(i.n, m);
        if let Some(k) = s.availabilities.iter().position(|a| (a - gamma).abs() > 1e-9) {
            return Err(format!("seed {seed}: node {k} availability {} vs {gamma}", s.availabilities[k]));
        }
        let obj = s.obj_m.unwrap();
        if !rel_close(obj, gamma * sol.value, 1e-8) && (obj - gamma * sol.value).abs() > 1e-12 {
            return Err(format!("seed {seed}: obj {obj} vs {}", gamma * sol.value));
        }
        checked += 1;
    }
    Ok(format!("{checked} relaxation outputs"))
}

fn c5_tightness() -> Outcome {
    let reports = [1.0, 10.0, 100.0, 1000.0].iter().map(|&k| tightness_demo(3, 2, k)).collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
    let last = reports.last().unwrap();
    if (last.algorithm_value - 1.5).abs() > 1e-9 {
        return Err(format!("algorithm value {}", last.algorithm_value));
    }
    if last.all_ones_value < 2.85 {
        return Err(format!("all-ones value {}", last.all_ones_value));
    }
    if !reports.windows(2).all(|w| w[1].ratio <= w[0].ratio) {
        return Err(format!("ratios {:?}", reports.iter().map(|r| r.ratio).collect::<Vec<_>>()));
    }
    Ok(format!("value {:.12}, all-ones {:.6}, ratio at k=1000 {:.6}", last.algorithm_value, last.all_ones_value, last.ratio))
}

fn c6_certificate() -> Outcome {
    let cfg = SolverConfig::default();
    let base = RandomInstanceConfig { redirect: true, matching: true, per_origin_dists: true, ..Default::default() };
    let mut worst = f64::INFINITY;
    for seed in 0..100 {
        let i = random_instance_seeded(seed, &base);
        for v in [Variant::Efr, Variant::Supply, Variant::Matching, Variant::Point] {
            let r = approximation_certificate(&i, v, &cfg).map_err(|e| format!("seed {seed} {v}: {e}"))?;
            if r.obj_m / r.upper_bound < r.threshold - 1e-9 {
                return Err(format!("seed {seed} {v}: {} / {} < {}", r.obj_m, r.upper_bound, r.threshold));
            }
            worst = worst.min(r.obj_m / r.upper_bound - r.threshold);
        }
    }
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    let small = RandomInstanceConfig { n_max: 3, m_min: 1, m_max: 1, extra_pair_prob: 0.0, ..Default::default() };
    let mut searched = 0;
    for seed in 0..10 {
        let i = random_instance_seeded(seed, &small);
        let r = approximation_certificate(&i, Variant::Efr, &cfg).map_err(|e| e.to_string())?;
        let g = brute_force_state_dependent_opt(&i, 1, &grid, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
        if !g.certified {
            return Err(format!("seed {seed}: grid search not exhaustive"));
        }
        if r.obj_m < guarantee(i.n, 1) * g.objective - 1e-9 {
            return Err(format!("seed {seed}: {} < gamma * {}", r.obj_m, g.objective));
        }
        searched += 1;
    }
    Ok(format!("400 certificates, min slack {worst:.3e}; {searched} grid-searched cases"))
}

fn c7_bicriteria() -> Outcome {
    let cfg = SolverConfig::default();
    for seed in 0..20 {
        let mut i = random_instance_seeded(seed, &RandomInstanceConfig { multi_objective: true, ..Default::default() });
        let mut sec = i.clone();
        sec.objective = i.multi_objective.unwrap().kind;
        let psi_max = solve(&sec, Variant::Efr, &cfg).map_err(|e| e.to_string())?.value;
        i.multi_objective.as_mut().unwrap().requirement = 0.7 * psi_max;
        let r = bicriteria_check(&i, &cfg).map_err(|e| e.to_string())?;
        if !r.passed {
            return Err(format!("seed {seed}: {r:?}"));
        }
    }
    Ok("20 instances".into())
}

fn c8_headline() -> Outcome {
    let r = approximation_certificate(&ring_instance(600, 10_000), Variant::Point, &SolverConfig::default()).map_err(|e| e.to_string())?;
    if (r.approximation_ratio - 1.0599).abs() <= 1e-4 && r.passed {
        Ok(format!("approximation ratio {:.4}", r.approximation_ratio))
    } else {
        Err(format!("{r:?}"))
    }
}

fn c9_tail() -> Outcome {
    let v = tail_bound_violations(50);
    if v.is_empty() {
        Ok("250 grid points, 0 violations".into())
    } else {
        Err(format!("{} violations, first {:?}", v.len(), v[0]))
    }
}

fn c10_biregular() -> Outcome {
    for n in 1..=4 {
        for m in 1..=6 {
            let g = build_biregular_graph::<Rational>(n, m).map_err(|e| e.to_string())?;
            let right = Rational::new((m + n - 1) as i128, m as i128);
            if !g.upper_sums.iter().all(|&v| v == Rational::from_integer(1)) || !g.lower_sums.iter().all(|&v| v == right) {
                return Err(format!("n={n} m={m}"));
            }
        }
    }
    Ok("24 sizes exact".into())
}

fn c11_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..10 {
        let i = random_instance_seeded(1_000 + seed, &RandomInstanceConfig::default());
        let q: Vec<f64> = (0..i.n).map(|_| rng.gen_range(0.1..0.7)).collect();
        let q2: Vec<f64> = q.iter().map(|&x| if rng.gen_bool(0.5) { rng.gen_range(x..=1.0) } else { x }).collect();
        let r = check_flow_monotonicity(&i, &q, &q2).map_err(|e| e.to_string())?;
        if !r.monotone {
            return Err(format!("seed {seed}: {r:?}"));
        }
    }
    Ok("10 instances, 0 violations".into())
}

fn c12_simulation() -> Outcome {
    let (mut ok, mut total) = (0usize, 0usize);
    for seed in 0..20 {
        let i = random_instance_seeded(seed, &RandomInstanceConfig::default());
        let p = QuantilePolicy::constant(&i, 0.8);
        let exact = steady_state_summary(&i, &p, i.m).map_err(|e| e.to_string())?;
        let cfg = SimConfig { seed, horizon: 1e5, replications: 10, ..SimConfig::default() };
        let r = simulate(&i, SimPolicy::Static(&p), &cfg).map_err(|e| e.to_string())?;
        for (a, b) in i.edges() {
            total += 1;
            if (r.flows[(a, b)] - exact.flows[(a, b)]).abs() <= 3.0 * r.flow_half_width[(a, b)] + 1e-12 {
                ok += 1;
            }
        }
    }
    if (ok as f64) < 0.95 * total as f64 {
        return Err(format!("{ok}/{total} flows within 3 half-widths"));
    }
    let d = symmetric_delay_instance(3, 100, 5.0);
    let sol = solve_efr_rate_limited(&d, &SolverConfig::default()).map_err(|e| e.to_string())?;
    let policy = QuantilePolicy::new(sol.scaled_q.ok_or("no scaled quantiles")?);
    let sim = SimConfig { seed: 12, horizon: 1e5, replications: 10, ..SimConfig::default() };
    let r = delay_bound_check(&d, &policy, Some(&sim)).map_err(|e| e.to_string())?;
    if !r.passed {
        return Err(format!("delay bound: {r:?}"));
    }
    Ok(format!(
        "{ok}/{total} flows within 3 half-widths; delay max availability {:.4} >= bound {:.4}",
        r.simulated_max_availability.unwrap_or(f64::NAN),
        r.bound
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Option<u64>); 12] = [
        ("product-form correctness", c1_product_form, Some(10)),
        ("non-concavity reproduction", c2_nonconcavity, Some(1)),
        ("exact ratio identity", c3_ratio_identity, Some(5)),
        ("demand-circulation availability", c4_circulation, None),
        ("tightness", c5_tightness, Some(2)),
        ("approximation certificate", c6_certificate, Some(60)),
        ("bicriteria", c7_bicriteria, None),
        ("headline ratio", c8_headline, None),
        ("poisson tail bound", c9_tail, None),
        ("biregular graph", c10_biregular, None),
        ("monotonicity", c11_monotonicity, None),
        ("simulation consistency", c12_simulation, Some(300)),
    ];
    let mut failed = 0;
    for (k, (name, f, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut outcome = f();
        let elapsed = start.elapsed();
        if let (Ok(msg), Some(s)) = (&outcome, limit) {
            if elapsed > Duration::from_secs(*s) {
                outcome = Err(format!("{msg}; took {:.2}s, limit {s}s", elapsed.as_secs_f64()));
            }
        }
        let (tag, msg) = match &outcome {
            Ok(m) => ("PASS", m),
            Err(m) => {
                failed += 1;
                ("FAIL", m)
            }
        };
        println!("{tag} {:>2} {name} ({:.2}s): {msg}", k + 1, elapsed.as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
