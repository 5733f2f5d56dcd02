use fleet_core::gordon_newell::{stationary_distribution_explicit, steady_state_summary, NetworkSpec};
use fleet_core::model::{random_instance_seeded, RandomInstanceConfig};
use fleet_core::relax::{solve, solve_efr, SolverConfig, Variant};
use fleet_core::verify::*;
use fleet_core::{Error, Instance, Matrix, QuantilePolicy, Rational, RewardKind, Units, ValueDistribution};

const U01: ValueDistribution = ValueDistribution::Uniform { a: 0.0, b: 1.0 };

fn rows(r: Vec<Vec<f64>>) -> Matrix<f64> {
    Matrix::from_rows(r).unwrap()
}

fn sym2(m: u64) -> Instance {
    Instance::uniform_dist(Units::Finite(m), RewardKind::Throughput, rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]), U01)
}

fn rat(a: i128, b: i128) -> Rational {
    Rational::new(a, b)
}

#[test]
fn two_state_brute_force_matches_balance_equation() {
    // Intensities r = (1/4, 1/2), proportional to (1, 2).
    let i = Instance::uniform_dist(Units::Finite(1), RewardKind::Throughput, rows(vec![vec![0.0, 2.0], vec![1.0, 0.0]]), U01);
    let p = QuantilePolicy::constant(&i, 1.0);
    let bf = brute_force_stationary(&i, &p, 1).unwrap();
    assert!((bf.prob(&[1, 0]).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert!((bf.prob(&[0, 1]).unwrap() - 2.0 / 3.0).abs() < 1e-12);

    let phi = Matrix::from_rows(vec![vec![rat(0, 1), rat(2, 1)], vec![rat(1, 1), rat(0, 1)]]).unwrap();
    let q = Matrix::filled(2, 2, rat(1, 1));
    let exact = generator_stationary(&NetworkSpec::plain(phi, q), 1, BRUTE_FORCE_CAP).unwrap();
    assert_eq!(exact.prob(&[1, 0]), Some(rat(1, 3)));
    assert_eq!(exact.prob(&[0, 1]), Some(rat(2, 3)));
}

#[test]
fn circulation_policy_is_uniform() {
    let phi = rows(vec![vec![0.0, 1.0, 2.0], vec![2.0, 0.0, 1.0], vec![1.0, 2.0, 0.0]]);
    let i = Instance::uniform_dist(Units::Finite(2), RewardKind::Throughput, phi, U01);
    let bf = brute_force_stationary(&i, &QuantilePolicy::constant(&i, 1.0), 2).unwrap();
    assert_eq!(bf.states.len(), 6);
    for p in &bf.probs {
        assert!((p - 1.0 / 6.0).abs() < 1e-12);
    }
}

#[test]
fn absorbing_state_is_reducible() {
    let i = sym2(1);
    let q = |x: &[u32], _: usize, _: usize| if x[0] == 1 { 0.0 } else { 1.0 };
    let err = state_dependent_stationary(&i.demand, 1, &q, BRUTE_FORCE_CAP).unwrap_err();
    assert!(matches!(err, Error::Reducible { .. }), "{err:?}");
}

#[test]
fn brute_force_respects_cap() {
    let n = 6;
    let phi = Matrix::from_fn(n, n, |i, j| if i != j { 1.0 } else { 0.0 });
    let i = Instance::uniform_dist(Units::Finite(20), RewardKind::Throughput, phi, U01);
    let err = brute_force_stationary(&i, &QuantilePolicy::constant(&i, 1.0), 20).unwrap_err();
    assert!(matches!(err, Error::TooLarge { .. }));
}

#[test]
fn product_form_suite_agrees() {
    let suite = product_form_suite();
    assert!(suite.len() >= 30);
    for kind in ["redirect", "matching", "delay"] {
        assert!(suite.iter().any(|c| c.name.contains(kind)), "{kind}");
    }
    for case in &suite {
        let r = check_product_form(case);
        assert!(r.passed, "{r:?}");
    }
}

#[test]
fn explicit_and_generator_agree_on_random_instances() {
    for seed in 0..20 {
        let i = random_instance_seeded(seed, &RandomInstanceConfig { n_max: 3, m_max: 4, ..Default::default() });
        let m = i.m.finite().unwrap() as usize;
        let p = QuantilePolicy::constant(&i, 0.8);
        let a = stationary_distribution_explicit(&i, &p, m).unwrap();
        let b = brute_force_stationary(&i, &p, m).unwrap();
        let idx = b.index();
        for (x, pa) in a.states.iter().zip(&a.probs) {
            assert!((pa - b.probs[idx[x]]).abs() < 1e-9);
        }
    }
}

#[test]
fn grid_search_two_node() {
    let r = brute_force_state_dependent_opt(&sym2(1), 1, &[0.0, 0.5, 1.0], DEFAULT_BUDGET).unwrap();
    assert!(r.certified);
    assert!((r.objective - 1.0).abs() < 1e-12);
    for (x, row) in r.states.iter().zip(&r.assignment) {
        for (e, &(i, _)) in r.edges.iter().enumerate() {
            if x[i] > 0 {
                assert_eq!(row[e], 1.0);
            }
        }
    }
    assert!(r.objective >= r.best_state_independent.unwrap() - 1e-12);
}

#[test]
fn grid_search_covers_nonconcavity_network() {
    let eps = 0.1;
    let i = nonconcavity_instance(eps);
    let demo = nonconcavity_demo(eps).unwrap();
    let r = brute_force_state_dependent_opt(&i, 1, &[eps, (1.0 + eps) / 2.0, 1.0], DEFAULT_BUDGET).unwrap();
    assert!(r.certified);
    assert!(r.objective >= demo.throughputs[2] - 1e-12);
    assert!(r.objective >= r.best_state_independent.unwrap() - 1e-12);
}

#[test]
fn grid_search_heuristic_label() {
    let r = brute_force_state_dependent_opt(&sym2(3), 3, &[0.0, 0.5, 1.0], DEFAULT_BUDGET).unwrap();
    assert!(!r.certified);
    assert!(r.objective > 0.0);
}

#[test]
fn biregular_example() {
    let g = build_biregular_graph::<Rational>(2, 3).unwrap();
    let s = g.upper.iter().position(|x| x == &vec![2, 1]).unwrap();
    let mut out: Vec<(Vec<u32>, Rational)> =
        g.edges.iter().filter(|e| e.0 == s).map(|e| (g.lower[e.1].clone(), e.2)).collect();
    out.sort();
    assert_eq!(out, vec![(vec![1, 1], rat(2, 3)), (vec![2, 0], rat(1, 3))]);
    for &v in &g.lower_sums {
        assert_eq!(v, rat(4, 3));
    }
    let one = build_biregular_graph::<Rational>(1, 5).unwrap();
    assert_eq!(one.edges.len(), 1);
    assert_eq!(one.upper_sums, vec![rat(1, 1)]);
    assert_eq!(one.lower_sums, vec![rat(1, 1)]);
    let g = build_biregular_graph::<f64>(3, 2).unwrap();
    assert_eq!((g.upper.len(), g.lower.len()), (6, 3));
    assert!(g.lower_sums.iter().all(|&v| (v - 2.0).abs() < 1e-12));
}

#[test]
fn biregular_sums_exact_for_small_sizes() {
    for n in 1..=4 {
        for m in 1..=6 {
            let g = build_biregular_graph::<Rational>(n, m).unwrap();
            assert!(g.upper_sums.iter().all(|&v| v == rat(1, 1)));
            assert!(g.lower_sums.iter().all(|&v| v == rat((m + n - 1) as i128, m as i128)));
            for &(s, t, _) in &g.edges {
                let d: i64 = g.upper[s].iter().zip(&g.lower[t]).map(|(&a, &b)| a as i64 - b as i64).sum();
                assert_eq!(d, 1);
            }
        }
    }
}

#[test]
fn poisson_tail_examples() {
    assert_eq!(poisson_tail_bound(3.0, 0.0).unwrap(), 1.0);
    let b = poisson_tail_bound(10.0, 5.0).unwrap();
    assert!((b - (-0.625f64).exp()).abs() < 1e-15);
    assert!((b - 0.53526).abs() < 1e-5);
    let exact = poisson_tail_exact(10.0, 15.0);
    assert!((exact - 0.0487).abs() < 1e-4, "{exact}");
    assert!(exact <= b);
    assert!(poisson_tail_bound(10.0, 11.0).is_err());
    assert!(poisson_tail_bound(10.0, -1.0).is_err());
    assert!(tail_bound_violations(50).is_empty());
}

#[test]
fn nonconcavity_at_one_tenth() {
    let r = nonconcavity_demo(0.1).unwrap();
    let want = [6.0, 1.5 / 0.31, 3.0 / 1.1];
    for k in 0..3 {
        assert!((r.return_times[k] - want[k]).abs() < 1e-9);
    }
    let tp = [0.33333, 0.41333, 0.73333];
    for k in 0..3 {
        assert!((r.throughputs[k] - tp[k]).abs() < 1e-5);
    }
    assert!(r.formulas_match && r.nonconcave);
}

#[test]
fn nonconcavity_small_eps() {
    for eps in [0.1, 0.01] {
        let r = nonconcavity_demo(eps).unwrap();
        assert!(r.formulas_match && r.nonconcave, "{eps}");
    }
    let eps = 1e-4;
    let r = nonconcavity_demo(eps).unwrap();
    assert!(r.throughputs[0] < 10.0 * eps && r.throughputs[1] < 10.0 * eps);
    assert!((r.throughputs[2] - 2.0 / 3.0 * (1.0 + eps)).abs() < 1e-6);
}

#[test]
fn nonconcavity_degenerates_at_one_half() {
    // All three closed forms equal 2 at eps = 1/2.
    let r = nonconcavity_demo(0.5).unwrap();
    assert!(r.formulas_match);
    for t in r.throughputs {
        assert!((t - 1.0).abs() < 1e-12);
    }
    assert!(!r.nonconcave);
}

#[test]
fn return_time_first_step_oracle() {
    // Two states with unit rates: return time 2.
    let rates = rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    assert!((expected_return_time(&rates, 0).unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn tightness_examples() {
    let mut ratios = Vec::new();
    for k in [1.0, 10.0, 100.0, 1000.0] {
        let r = tightness_demo(3, 2, k).unwrap();
        assert!((r.algorithm_value - 1.5).abs() < 1e-9);
        assert!(r.ratio >= r.guarantee - 1e-12);
        ratios.push(r.ratio);
    }
    assert!(ratios.windows(2).all(|w| w[1] <= w[0]));
    let big = tightness_demo(3, 2, 1000.0).unwrap();
    assert!(big.all_ones_value >= 2.85);
    let small = tightness_demo(3, 2, 1.0).unwrap();
    assert!(small.ratio > 0.5);
}

#[test]
fn monotonicity_examples() {
    let i = sym2(2);
    let r = check_flow_monotonicity(&i, &[0.5, 0.5], &[1.0, 1.0]).unwrap();
    assert!(r.monotone);
    let r = check_flow_monotonicity(&i, &[0.3, 0.7], &[0.3, 0.7]).unwrap();
    assert!(r.worst_violation.abs() < 1e-14);
    assert!(check_flow_monotonicity(&i, &[1.0, 1.0], &[0.5, 0.5]).is_err());
    for seed in 0..10 {
        let i = random_instance_seeded(100 + seed, &RandomInstanceConfig::default());
        let n = i.n;
        let q: Vec<f64> = (0..n).map(|k| 0.2 + 0.15 * k as f64).collect();
        let mut q2 = q.clone();
        q2[seed as usize % n] += 0.3;
        assert!(check_flow_monotonicity(&i, &q, &q2).unwrap().monotone);
    }
}

#[test]
fn certificate_two_node() {
    let r = approximation_certificate(&sym2(1), Variant::Efr, &SolverConfig::default()).unwrap();
    assert!((r.elevated - 2.0).abs() < 1e-9);
    assert!((r.obj_m - 1.0).abs() < 1e-9);
    assert!((r.ratio - 0.5).abs() < 1e-9);
    assert!(r.circulation && r.passed);
}

#[test]
fn certificate_batch_all_variants() {
    let cfg = SolverConfig::default();
    for seed in 0..25 {
        let base = RandomInstanceConfig { redirect: true, matching: true, per_origin_dists: true, ..Default::default() };
        let i = random_instance_seeded(seed, &base);
        for v in [Variant::Efr, Variant::Supply, Variant::Matching, Variant::Point] {
            let r = approximation_certificate(&i, v, &cfg).unwrap();
            assert!(r.passed, "seed {seed} {v}: {r:?}");
        }
    }
}

#[test]
fn certificate_rejects_rate_limited() {
    assert!(matches!(
        approximation_certificate(&sym2(1), Variant::RateLimited, &SolverConfig::default()),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn ring_headline_ratio() {
    let i = ring_instance(600, 10_000);
    let r = approximation_certificate(&i, Variant::Point, &SolverConfig::default()).unwrap();
    assert!((r.approximation_ratio - 1.0599).abs() < 1e-4);
    assert!(r.passed);
}

#[test]
fn efr_policy_beats_grid_optimum_fraction() {
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    for seed in 0..5 {
        let i = random_instance_seeded(
            seed,
            &RandomInstanceConfig { n_max: 3, m_min: 1, m_max: 1, extra_pair_prob: 0.0, ..Default::default() },
        );
        let sol = solve_efr(&i, &SolverConfig::default()).unwrap();
        let p = QuantilePolicy::new(sol.q.clone());
        let v = steady_state_summary(&i, &p, i.m).unwrap().obj_m.unwrap();
        let g = brute_force_state_dependent_opt(&i, 1, &grid, DEFAULT_BUDGET).unwrap();
        assert!(g.certified);
        assert!(v >= guarantee(i.n, 1) * g.objective - 1e-9, "seed {seed}");
        assert!(sol.value >= g.objective - 1e-6);
    }
}

#[test]
fn bicriteria_batch() {
    let cfg = SolverConfig::default();
    for seed in 0..10 {
        let mut i = random_instance_seeded(seed, &RandomInstanceConfig { multi_objective: true, ..Default::default() });
        let mut sec = i.clone();
        sec.objective = i.multi_objective.unwrap().kind;
        let psi_max = solve(&sec, Variant::Efr, &cfg).unwrap().value;
        i.multi_objective.as_mut().unwrap().requirement = 0.7 * psi_max;
        let r = bicriteria_check(&i, &cfg).unwrap();
        assert!(r.passed, "seed {seed}: {r:?}");
    }
}

#[test]
fn delay_bound_exact() {
    let i = symmetric_delay_instance(3, 100, 5.0);
    let r = delay_bound_check(&i, &QuantilePolicy::constant(&i, 1.0), None).unwrap();
    assert!((r.load - 30.0).abs() < 1e-12);
    assert!(r.load <= r.load_limit);
    assert!(r.passed, "{r:?}");
    assert!(delay_bound_check(&sym2(2), &QuantilePolicy::constant(&sym2(2), 1.0), None).is_err());
}
