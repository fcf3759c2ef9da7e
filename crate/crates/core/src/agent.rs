//! Simulated biased agents.

use std::cmp::Ordering;

use rand::Rng;
use serde::Serialize;

use crate::belief::Belief;
use crate::bias::{check_endpoints, BiasFunction, LinearBias};
use crate::design::preference_coeffs;
use crate::error::{Error, Result};
use crate::instance::{best_response, Instance, TieBreak};
use crate::scheme::{bayes_posterior, SignalingScheme, ZERO_SIGNAL};
use crate::TOL;

/// An expected-utility maximizer that knows the scheme, computes the Bayes
/// posterior correctly and then distorts it with its bias function.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasedAgent<B = LinearBias> {
    w: f64,
    bias: B,
    tiebreak: TieBreak,
}

fn endpoint_probes() -> Vec<(Belief, Belief)> {
    let raw: [(&[f64], &[f64]); 4] = [
        (&[0.5, 0.5], &[1.0, 0.0]),
        (&[0.2, 0.8], &[0.7, 0.3]),
        (&[0.3, 0.3, 0.4], &[0.0, 0.1, 0.9]),
        (&[0.1, 0.2, 0.3, 0.4], &[0.25, 0.25, 0.25, 0.25]),
    ];
    raw.iter()
        .map(|(p, q)| (Belief::from_raw(p.to_vec()), Belief::from_raw(q.to_vec())))
        .collect()
}

impl BiasedAgent<LinearBias> {
    pub fn linear(w: f64, tiebreak: TieBreak) -> Result<Self> {
        BiasedAgent::new(w, LinearBias, tiebreak)
    }
}

impl<B: BiasFunction> BiasedAgent<B> {
    pub fn new(w: f64, bias: B, tiebreak: TieBreak) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::OutOfRangeBias(w));
        }
        if let Some((prior, post)) = endpoint_probes().iter().find(|(p, q)| !check_endpoints(&bias, p, q)) {
            return Err(Error::DegenerateParameters(format!(
                "bias function `{}` fails the endpoint identities at prior {:?}, posterior {:?}",
                bias.name(),
                prior.probs(),
                post.probs()
            )));
        }
        Ok(BiasedAgent { w, bias, tiebreak })
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn bias(&self) -> &B {
        &self.bias
    }

    pub fn tiebreak(&self) -> TieBreak {
        self.tiebreak
    }

    /// Belief the agent acts on after `signal`.
    pub fn belief(&self, instance: &Instance, scheme: &SignalingScheme, signal: usize) -> Result<Belief> {
        let posterior = bayes_posterior(instance, scheme, signal)?;
        Ok(self.bias.apply(instance.prior(), &posterior, self.w))
    }

    /// Action chosen after observing `signal`.
    pub fn act(&self, instance: &Instance, scheme: &SignalingScheme, signal: usize) -> Result<usize> {
        let belief = self.belief(instance, scheme, signal)?;
        Ok(best_response(instance, &belief, self.tiebreak).action)
    }

    /// One round: draw a state from the prior, a signal from the scheme, and
    /// let the agent respond.
    pub fn sample_episode<R: Rng + ?Sized>(
        &self,
        instance: &Instance,
        scheme: &SignalingScheme,
        rng: &mut R,
    ) -> Result<Episode> {
        let state = draw(instance.prior().probs().iter().copied(), rng);
        let signal = draw(scheme.cond().iter().map(|row| row[state]), rng);
        let action = self.act(instance, scheme, signal)?;
        Ok(Episode { state, signal, action })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Episode {
    pub state: usize,
    pub signal: usize,
    pub action: usize,
}

/// Index drawn from a discrete distribution. Zero-weight entries are never returned.
fn draw<R: Rng + ?Sized>(weights: impl Iterator<Item = f64> + Clone, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (i, w) in weights.enumerate() {
        if w <= 0.0 {
            continue;
        }
        cumulative += w;
        last_positive = i;
        if u < cumulative {
            return i;
        }
    }
    last_positive
}

/// Sign of the linear-model preference for `a1` over `a2` after `signal`,
/// evaluated without forming the posterior:
/// `Σ_θ π(s|θ) μ0(θ) [(1-w) ΔU(a1,a2,θ) + w Σ_θ' μ0(θ') ΔU(a1,a2,θ')]`.
/// `Greater` means `a1` is strictly preferred.
pub fn preference_sign(
    instance: &Instance,
    scheme: &SignalingScheme,
    signal: usize,
    a1: usize,
    a2: usize,
    w: f64,
) -> Result<Ordering> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::OutOfRangeBias(w));
    }
    scheme.check_fits(instance)?;
    if scheme.signal_prob(instance.prior(), signal) <= ZERO_SIGNAL {
        return Err(Error::ZeroProbabilitySignal(scheme.signals()[signal].clone()));
    }
    let value: f64 = preference_coeffs(instance, a1, a2, w)
        .iter()
        .zip(&scheme.cond()[signal])
        .map(|(c, p)| c * p)
        .sum();
    Ok(if value > TOL {
        Ordering::Greater
    } else if value < -TOL {
        Ordering::Less
    } else {
        Ordering::Equal
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::design_scheme;
    use rand::SeedableRng;

    fn two_state() -> Instance {
        Instance::new(
            vec!["Good".into(), "Bad".into()],
            vec!["Active".into(), "Passive".into()],
            vec![0.2, 0.8],
            vec![vec![1.0, -1.0], vec![0.0, 0.0]],
        )
        .unwrap()
    }

    #[test]
    fn acts_on_boundary_signal() {
        let inst = two_state();
        let scheme = design_scheme(&inst, 0.5).unwrap().scheme;
        let low = BiasedAgent::linear(0.3, TieBreak::PreferDefault).unwrap();
        assert!(
            low.belief(&inst, &scheme, 0)
                .unwrap()
                .distance(&Belief::new(vec![0.62, 0.38]).unwrap())
                < 1e-12
        );
        assert_eq!(low.act(&inst, &scheme, 0).unwrap(), 0);
        let high = BiasedAgent::linear(0.7, TieBreak::PreferDefault).unwrap();
        assert_eq!(high.act(&inst, &scheme, 0).unwrap(), 1);
        let tied = BiasedAgent::linear(0.5, TieBreak::PreferDefault).unwrap();
        assert_eq!(tied.act(&inst, &scheme, 0).unwrap(), 1);
        let tied = BiasedAgent::linear(0.5, TieBreak::PreferNonDefault).unwrap();
        assert_eq!(tied.act(&inst, &scheme, 0).unwrap(), 0);
    }

    #[test]
    fn preference_signs() {
        let inst = two_state();
        let scheme = design_scheme(&inst, 0.5).unwrap().scheme;
        assert_eq!(
            preference_sign(&inst, &scheme, 0, 0, 1, 0.3).unwrap(),
            Ordering::Greater
        );
        assert_eq!(preference_sign(&inst, &scheme, 0, 0, 1, 0.5).unwrap(), Ordering::Equal);
        assert_eq!(preference_sign(&inst, &scheme, 0, 0, 1, 0.7).unwrap(), Ordering::Less);
    }

    #[test]
    fn rejects_bad_agents() {
        assert_eq!(
            BiasedAgent::linear(1.2, TieBreak::PreferDefault),
            Err(Error::OutOfRangeBias(1.2))
        );
        struct Stubborn;
        impl BiasFunction for Stubborn {
            fn name(&self) -> String {
                "stubborn".into()
            }
            fn apply(&self, prior: &Belief, _: &Belief, _: f64) -> Belief {
                prior.clone()
            }
        }
        assert!(matches!(
            BiasedAgent::new(0.5, Stubborn, TieBreak::PreferDefault),
            Err(Error::DegenerateParameters(_))
        ));
    }

    #[test]
    fn signal_frequency() {
        let inst = two_state();
        let scheme = design_scheme(&inst, 0.5).unwrap().scheme;
        let agent = BiasedAgent::linear(0.3, TieBreak::PreferDefault).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| agent.sample_episode(&inst, &scheme, &mut rng).unwrap().signal == 0)
            .count();
        assert!((hits as f64 / n as f64 - 0.25).abs() < 0.01);
    }

    #[test]
    fn uninformative_and_stubborn_play_default() {
        let inst = two_state();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let none = SignalingScheme::uninformative(2);
        let full = SignalingScheme::fully_informative(&inst);
        for w in [0.0, 0.4, 1.0] {
            let agent = BiasedAgent::linear(w, TieBreak::PreferNonDefault).unwrap();
            for _ in 0..200 {
                assert_eq!(agent.sample_episode(&inst, &none, &mut rng).unwrap().action, 1);
            }
        }
        let immovable = BiasedAgent::linear(1.0, TieBreak::PreferNonDefault).unwrap();
        for _ in 0..200 {
            assert_eq!(immovable.sample_episode(&inst, &full, &mut rng).unwrap().action, 1);
        }
    }

    #[test]
    fn draw_skips_zero_weights() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1000 {
            assert_eq!(draw([0.0, 1.0, 0.0].into_iter(), &mut rng), 1);
        }
    }
}
