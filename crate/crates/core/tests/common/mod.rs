#![allow(dead_code)]

use biaslab::{Belief, Instance};
use rand::Rng;

pub fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// States {Good, Bad}, actions {Active, Passive}, μ0(Good) = 0.2, indifference at 0.5.
pub fn two_state() -> Instance {
    Instance::new(
        vec!["Good".into(), "Bad".into()],
        vec!["Active".into(), "Passive".into()],
        vec![0.2, 0.8],
        vec![vec![1.0, -1.0], vec![0.0, 0.0]],
    )
    .unwrap()
}

/// Two-state family with prior `mu0` on Good and Active optimal above `mu_star`.
pub fn two_state_family(mu0: f64, mu_star: f64) -> Instance {
    Instance::new(
        vec!["Good".into(), "Bad".into()],
        vec!["Active".into(), "Passive".into()],
        vec![mu0, 1.0 - mu0],
        vec![vec![1.0 - mu_star, -mu_star], vec![0.0, 0.0]],
    )
    .unwrap()
}

pub fn three_action() -> Instance {
    Instance::new(
        vec!["G".into(), "B".into()],
        vec!["a0".into(), "a1".into(), "a2".into()],
        vec![0.5, 0.5],
        vec![vec![0.1, 0.1], vec![1.0, -1.0], vec![-1.0, 1.0]],
    )
    .unwrap()
}

pub fn random_simplex<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

pub fn random_belief<R: Rng>(rng: &mut R, n: usize) -> Belief {
    Belief::new(random_simplex(rng, n)).unwrap()
}

/// Random instance with 2..=5 states and actions, full-support prior and a
/// default action that wins at the prior by at least 1e-3.
pub fn random_instance<R: Rng>(rng: &mut R) -> Instance {
    loop {
        let ns = rng.random_range(2..=5);
        let na = rng.random_range(2..=5);
        let prior = random_simplex(rng, ns);
        if prior.iter().any(|p| *p < 0.02) {
            continue;
        }
        let utility: Vec<Vec<f64>> = (0..na)
            .map(|_| (0..ns).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        if let Ok(inst) = Instance::new(labels("s", ns), labels("a", na), prior, utility) {
            if inst.prior_margin() >= 1e-3 {
                return inst;
            }
        }
    }
}

/// Random scheme with `signals` signals over `states` states.
pub fn random_cond<R: Rng>(rng: &mut R, signals: usize, states: usize) -> Vec<Vec<f64>> {
    let columns: Vec<Vec<f64>> = (0..states).map(|_| random_simplex(rng, signals)).collect();
    (0..signals).map(|s| columns.iter().map(|c| c[s]).collect()).collect()
}
