use fleet_core::model::*;
use fleet_core::{DiagnosticCode, Error, Matrix};
use proptest::prelude::*;

const U01: ValueDistribution = ValueDistribution::Uniform { a: 0.0, b: 1.0 };

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn quantile_to_price_examples() {
    assert_eq!(quantile_to_price(&U01, 0.5).unwrap(), 0.5);
    assert_eq!(quantile_to_price(&ValueDistribution::exponential(1.0), 1.0).unwrap(), 0.0);
    let p = quantile_to_price(&ValueDistribution::exponential(2.0), 0.5).unwrap();
    // Bisection on e^{-2p} = 0.5.
    let (mut lo, mut hi) = (0.0f64, 10.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (-2.0 * mid).exp() > 0.5 {
            lo = mid
        } else {
            hi = mid
        }
    }
    assert!(close(p, lo, 1e-12));
    assert!(close(p, 0.34657, 1e-5));
    assert_eq!(quantile_to_price(&ValueDistribution::exponential(1.0), 0.0).unwrap(), f64::INFINITY);
    assert_eq!(quantile_to_price(&ValueDistribution::uniform(1.0, 3.0), 0.0).unwrap(), 3.0);
    assert!(matches!(quantile_to_price(&U01, 1.5), Err(Error::Domain(_))));
    assert!(matches!(quantile_to_price(&U01, -0.1), Err(Error::Domain(_))));
}

#[test]
fn price_to_quantile_examples() {
    assert_eq!(price_to_quantile(&U01, 0.25).unwrap(), 0.75);
    assert_eq!(price_to_quantile(&ValueDistribution::exponential(1.0), 0.0).unwrap(), 1.0);
    assert_eq!(price_to_quantile(&U01, -3.0).unwrap(), 1.0);
    assert_eq!(price_to_quantile(&U01, 7.0).unwrap(), 0.0);
    assert!(price_to_quantile(&U01, f64::NAN).is_err());
    for d in [U01, ValueDistribution::exponential(0.7), ValueDistribution::uniform(0.5, 2.0)] {
        for k in 1..10 {
            let q = k as f64 / 10.0;
            let p = quantile_to_price(&d, q).unwrap();
            assert!(close(price_to_quantile(&d, p).unwrap(), q, 1e-12));
        }
    }
}

#[test]
fn per_ride_reward_examples() {
    assert_eq!(per_ride_reward(RewardKind::Throughput, &U01, 0.3).unwrap(), 1.0);
    assert!(close(per_ride_reward(RewardKind::Revenue, &U01, 0.4).unwrap(), 0.6, 1e-15));
    let w = per_ride_reward(RewardKind::Welfare, &ValueDistribution::exponential(1.0), 0.5).unwrap();
    // Trapezoid integral of v e^{-v} over [ln 2, 40], divided by 1/2.
    let (a, b, k) = (2f64.ln(), 40.0, 400_000);
    let h = (b - a) / k as f64;
    let f = |v: f64| v * (-v).exp();
    let integral: f64 = (0..k).map(|s| 0.5 * h * (f(a + s as f64 * h) + f(a + (s + 1) as f64 * h))).sum();
    assert!(close(w, integral / 0.5, 1e-6));
    assert!(close(w, 1.69315, 1e-5));
    assert!(close(per_ride_reward(RewardKind::Welfare, &ValueDistribution::uniform(1.0, 3.0), 0.5).unwrap(), 2.5, 1e-15));
}

#[test]
fn reward_curve_examples() {
    assert!(close(reward_curve(RewardKind::Throughput, &U01, 0.7).unwrap(), 0.7, 1e-15));
    assert!(close(reward_curve(RewardKind::Revenue, &U01, 0.5).unwrap(), 0.25, 1e-15));
    assert!(close(reward_curve(RewardKind::Welfare, &U01, 1.0).unwrap(), 0.5, 1e-15));
    for kind in RewardKind::ALL {
        assert_eq!(reward_curve(kind, &ValueDistribution::exponential(1.0), 0.0).unwrap(), 0.0);
    }
}

#[test]
fn reward_derivative_examples() {
    assert!(close(reward_curve_derivative(RewardKind::Welfare, &U01, 0.25).unwrap(), 0.75, 1e-15));
    assert!(close(reward_curve_derivative(RewardKind::Revenue, &U01, 0.25).unwrap(), 0.5, 1e-15));
    let d = ValueDistribution::exponential(1.0);
    let h = 1e-6;
    let fd = (reward_curve(RewardKind::Welfare, &d, 0.5 + h).unwrap() - reward_curve(RewardKind::Welfare, &d, 0.5 - h).unwrap()) / (2.0 * h);
    assert!(close(reward_curve_derivative(RewardKind::Welfare, &d, 0.5).unwrap(), fd, 1e-6));
    assert!(matches!(reward_curve_derivative(RewardKind::Revenue, &U01, 0.0), Err(Error::Boundary { .. })));
    assert!(matches!(reward_curve_derivative(RewardKind::Revenue, &U01, 1.0), Err(Error::Boundary { .. })));
}

#[test]
fn concavity_examples() {
    assert!(check_concavity(RewardKind::Throughput, &U01, 101).concave);
    assert!(check_concavity(RewardKind::Revenue, &U01, 101).concave);
    assert!(check_concavity(RewardKind::Welfare, &ValueDistribution::exponential(1.0), 101).concave);
    for kind in RewardKind::ALL {
        for d in [ValueDistribution::exponential(2.5), ValueDistribution::uniform(0.3, 1.1)] {
            assert!(check_concavity(kind, &d, 501).concave, "{kind:?} {d:?}");
        }
    }
}

#[test]
fn per_ride_reward_non_increasing() {
    for kind in RewardKind::ALL {
        for d in [ValueDistribution::exponential(1.3), ValueDistribution::uniform(0.2, 2.0)] {
            let vals: Vec<f64> = (1..=1000).map(|s| per_ride_reward(kind, &d, s as f64 / 1000.0).unwrap()).collect();
            assert!(vals.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{kind:?} {d:?}");
        }
    }
}

fn two_node_json(rate: f64) -> String {
    format!(
        r#"{{"n": 2, "m": 1, "objective": "throughput", "demand": [
            {{"from": 0, "to": 1, "rate": {rate}, "dist": {{"family": "uniform", "params": {{"a": 0.0, "b": 1.0}}}}}},
            {{"from": 1, "to": 0, "rate": 1.0, "dist": {{"family": "uniform", "params": {{"a": 0.0, "b": 1.0}}}}}}
        ]}}"#
    )
}

fn codes(err: Error) -> Vec<(String, DiagnosticCode)> {
    match err {
        Error::InvalidInstance(d) => d.into_iter().map(|d| (d.pointer, d.code)).collect(),
        other => panic!("expected diagnostics, got {other:?}"),
    }
}

#[test]
fn validation_examples() {
    let i = parse_instance(&two_node_json(1.0)).unwrap();
    assert_eq!(i.n, 2);
    assert_eq!(i.demand[(0, 1)], 1.0);

    let d = codes(parse_instance(&two_node_json(-1.0)).unwrap_err());
    assert!(d.iter().any(|(p, c)| p == "/demand/0/rate" && *c == DiagnosticCode::NegativeRate), "{d:?}");

    let self_loop = two_node_json(1.0).replacen(r#""from": 0, "to": 1"#, r#""from": 0, "to": 0"#, 1);
    let d = codes(parse_instance(&self_loop).unwrap_err());
    assert!(d.iter().any(|(_, c)| *c == DiagnosticCode::SelfLoopDemand), "{d:?}");

    // Two components {0,1} and {2,3}.
    let mut demand = Matrix::zeros(4, 4);
    for (a, b) in [(0, 1), (1, 0), (2, 3), (3, 2)] {
        demand[(a, b)] = 1.0;
    }
    let i = Instance::uniform_dist(Units::Finite(2), RewardKind::Throughput, demand, U01);
    let d = i.validate().unwrap_err();
    assert!(d.iter().any(|x| x.code == DiagnosticCode::NotStronglyConnected));
    assert_eq!(DiagnosticCode::NotStronglyConnected.label(), "demand graph not strongly connected");
    assert_eq!(DiagnosticCode::SelfLoopDemand.label(), "self-loop demand");
}

#[test]
fn schema_errors_carry_pointers() {
    let bad = two_node_json(1.0).replace(r#""family": "uniform""#, r#""family": "pareto""#);
    let d = codes(parse_instance(&bad).unwrap_err());
    assert_eq!(d[0].1, DiagnosticCode::Schema);
    assert!(d[0].0.starts_with("/demand/0"), "{d:?}");
    let bad = two_node_json(1.0).replace(r#""m": 1"#, r#""m": "lots""#);
    assert!(parse_instance(&bad).is_err());
    let inf = two_node_json(1.0).replace(r#""m": 1"#, r#""m": "inf""#);
    assert_eq!(parse_instance(&inf).unwrap().m, Units::Infinite);
}

#[test]
fn json_round_trip_random_instances() {
    for seed in 0..50 {
        let cfg = RandomInstanceConfig {
            redirect: seed % 2 == 0,
            matching: seed % 3 == 0,
            travel_time: seed % 5 == 0,
            price_grid: seed % 7 == 0,
            multi_objective: seed % 4 == 0,
            per_origin_dists: seed % 2 == 1,
            ..Default::default()
        };
        let i = random_instance_seeded(seed, &cfg);
        assert!(i.validate().is_ok(), "seed {seed}");
        let back = parse_instance(&instance_to_json(&i)).unwrap();
        assert_eq!(back, i, "seed {seed}");
    }
}

#[test]
fn shipped_example_loads() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../instances/two_node.json");
    let i = load_instance(path).unwrap();
    assert_eq!(i.n, 2);
    assert_eq!(i.m, Units::Finite(1));
}

proptest! {
    #[test]
    fn price_quantile_round_trip(q in 0.001f64..0.999, rate in 0.1f64..5.0, a in 0.0f64..2.0, w in 0.1f64..3.0) {
        for d in [ValueDistribution::exponential(rate), ValueDistribution::uniform(a, a + w)] {
            let p = quantile_to_price(&d, q).unwrap();
            prop_assert!((price_to_quantile(&d, p).unwrap() - q).abs() <= 1e-12);
        }
    }

    #[test]
    fn reward_curve_identity(q in 0.0f64..=1.0, rate in 0.1f64..5.0) {
        let d = ValueDistribution::exponential(rate);
        for kind in RewardKind::ALL {
            let r = reward_curve(kind, &d, q).unwrap();
            prop_assert!(r >= 0.0);
            if q > 0.0 {
                prop_assert!((r - q * per_ride_reward(kind, &d, q).unwrap()).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference(q in 0.01f64..0.99, a in 0.0f64..1.0, w in 0.5f64..2.0) {
        let h = 1e-6;
        for d in [ValueDistribution::exponential(w), ValueDistribution::uniform(a, a + w)] {
            for kind in RewardKind::ALL {
                let fd = (reward_curve(kind, &d, q + h).unwrap() - reward_curve(kind, &d, q - h).unwrap()) / (2.0 * h);
                prop_assert!((reward_curve_derivative(kind, &d, q).unwrap() - fd).abs() <= 1e-6);
            }
        }
    }
}
