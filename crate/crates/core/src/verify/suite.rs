//! Shipped product-form cases: small networks compared state by state
//! against the generator solve.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::brute::brute_force_stationary;
use crate::error::Result;
use crate::gordon_newell::{stationary_from_spec, NetworkSpec, DEFAULT_STATE_CAP};
use crate::matrix::Matrix;
use crate::model::{random_instance, Instance, QuantilePolicy, RandomInstanceConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteCase {
    pub name: String,
    pub instance: Instance,
    pub policy: QuantilePolicy,
    pub m: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Feature {
    Plain,
    Redirect,
    Matching,
    Delay,
    DelayRedirect,
}

fn case(rng: &mut ChaCha8Rng, feature: Feature, n: usize, m: usize) -> SuiteCase {
    let cfg = RandomInstanceConfig {
        n_min: n,
        n_max: n,
        m_min: m as u64,
        m_max: m as u64,
        redirect: matches!(feature, Feature::Redirect | Feature::DelayRedirect),
        matching: feature == Feature::Matching,
        travel_time: matches!(feature, Feature::Delay | Feature::DelayRedirect),
        ..RandomInstanceConfig::default()
    };
    let instance = random_instance(rng, &cfg);
    let q = Matrix::from_fn(n, n, |i, j| if instance.phi(i, j) > 0.0 { rng.gen_range(0.3..1.0) } else { 0.0 });
    let mut policy = QuantilePolicy::new(q);
    if cfg.redirect {
        let mut r = Matrix::zeros(n, n);
        for i in 0..n {
            let pairs: Vec<usize> = instance.redirect_pairs().into_iter().filter(|p| p.0 == i).map(|p| p.1).collect();
            for &j in &pairs {
                r[(i, j)] = rng.gen_range(0.0..0.6) / pairs.len() as f64;
            }
        }
        policy = policy.with_redirect(r);
    }
    if cfg.matching {
        let mut mu = Matrix::zeros(n, n);
        for (i, k) in instance.matching_pairs() {
            mu[(i, k)] = rng.gen_range(0.0..0.5) / (n - 1) as f64;
        }
        policy = policy.with_matching(mu);
    }
    let name = format!("{feature:?}-n{n}-m{m}").to_lowercase();
    SuiteCase { name, instance, policy, m }
}

/// 33 cases with n <= 3 and m <= 4 covering plain pricing, redirection,
/// matching and travel times (with and without redirection).
pub fn product_form_suite() -> Vec<SuiteCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let mut cases = Vec::new();
    let plan: &[(Feature, usize, &[usize])] = &[
        (Feature::Plain, 2, &[1, 2, 3, 4]),
        (Feature::Plain, 3, &[1, 2, 3, 4]),
        (Feature::Plain, 3, &[1, 2, 3, 4]),
        (Feature::Redirect, 2, &[1, 2, 3]),
        (Feature::Redirect, 3, &[1, 2, 3, 4]),
        (Feature::Matching, 2, &[2]),
        (Feature::Matching, 3, &[1, 2, 3, 4]),
        (Feature::Delay, 2, &[1, 2, 3]),
        (Feature::Delay, 3, &[1, 2]),
        (Feature::DelayRedirect, 2, &[1, 2]),
        (Feature::DelayRedirect, 3, &[1, 2]),
    ];
    for &(feature, n, ms) in plan {
        for &m in ms {
            let mut c = case(&mut rng, feature, n, m);
            if cases.iter().any(|d: &SuiteCase| d.name == c.name) {
                c.name.push_str("-b");
            }
            cases.push(c);
        }
    }
    cases
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductFormCheck {
    pub name: String,
    pub states: usize,
    pub max_abs_diff: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn compare(case: &SuiteCase) -> Result<(usize, f64)> {
    let delays = case.instance.travel_time.is_some();
    let spec = NetworkSpec::from_instance(&case.instance, &case.policy, delays)?;
    let pf = stationary_from_spec(&spec, case.m, DEFAULT_STATE_CAP)?;
    let bf = brute_force_stationary(&case.instance, &case.policy, case.m)?;
    if pf.stations != bf.stations || pf.states.len() != bf.states.len() {
        return Ok((bf.states.len(), f64::INFINITY));
    }
    let index = bf.index();
    let mut worst = 0.0f64;
    for (x, &p) in pf.states.iter().zip(&pf.probs) {
        let d = index.get(x).map_or(f64::INFINITY, |&k| (bf.probs[k] - p).abs());
        worst = worst.max(d);
    }
    Ok((pf.states.len(), worst))
}

pub fn check_product_form(case: &SuiteCase) -> ProductFormCheck {
    match compare(case) {
        Ok((states, diff)) => {
            ProductFormCheck { name: case.name.clone(), states, max_abs_diff: diff, passed: diff <= 1e-9, error: None }
        }
        Err(e) => ProductFormCheck {
            name: case.name.clone(),
            states: 0,
            max_abs_diff: f64::INFINITY,
            passed: false,
            error: Some(e.to_string()),
        },
    }
}
