//! Instance fixtures shared by the benchmarks.

use biaslab::Instance;

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Deterministic instance with `states` states and `actions` actions where
/// action 0 is a safe default and the others each pay off in one state.
pub fn spread_instance(states: usize, actions: usize) -> Instance {
    let prior: Vec<f64> = (1..=states).map(|i| i as f64).collect();
    let total: f64 = prior.iter().sum();
    let prior = prior.into_iter().map(|p| p / total).collect();
    let mut utility = vec![vec![0.35; states]];
    for a in 1..actions {
        utility.push(
            (0..states)
                .map(|s| if s % (actions - 1) == a - 1 { 1.0 } else { -1.0 })
                .collect(),
        );
    }
    Instance::new(labels("s", states), labels("a", actions), prior, utility).expect("valid fixture")
}

pub fn two_state() -> Instance {
    Instance::new(
        labels("s", 2),
        vec!["Active".into(), "Passive".into()],
        vec![0.2, 0.8],
        vec![vec![1.0, -1.0], vec![0.0, 0.0]],
    )
    .expect("valid fixture")
}
