//! Signaling schemes, Bayes updates and the splitting identity.

use serde::{Deserialize, Serialize};

use crate::belief::Belief;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::TOL;

/// Signals whose unconditional probability is at most this are treated as never sent.
pub const ZERO_SIGNAL: f64 = 1e-12;

/// Conditional signal distributions `cond[s][θ] = π(s | θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SchemeFile", into = "SchemeFile")]
pub struct SignalingScheme {
    signals: Vec<String>,
    cond: Vec<Vec<f64>>,
}

/// Scheme file layout: rows of `cond` are signals, columns are states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeFile {
    pub signals: Vec<String>,
    pub cond: Vec<Vec<f64>>,
}

impl TryFrom<SchemeFile> for SignalingScheme {
    type Error = Error;

    fn try_from(f: SchemeFile) -> Result<Self> {
        SignalingScheme::new(f.signals, f.cond)
    }
}

impl From<SignalingScheme> for SchemeFile {
    fn from(s: SignalingScheme) -> Self {
        SchemeFile {
            signals: s.signals,
            cond: s.cond,
        }
    }
}

impl SignalingScheme {
    pub fn new(signals: Vec<String>, cond: Vec<Vec<f64>>) -> Result<Self> {
        if signals.is_empty() || signals.len() != cond.len() {
            return Err(Error::InvalidScheme(format!(
                "{} signal labels for {} rows",
                signals.len(),
                cond.len()
            )));
        }
        let num_states = cond[0].len();
        if num_states == 0 || cond.iter().any(|row| row.len() != num_states) {
            return Err(Error::InvalidScheme("ragged conditional matrix".into()));
        }
        if let Some(p) = cond.iter().flatten().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidScheme(format!("entry {p} is not a probability")));
        }
        for state in 0..num_states {
            let total: f64 = cond.iter().map(|row| row[state]).sum();
            if (total - 1.0).abs() > TOL {
                return Err(Error::InvalidScheme(format!(
                    "signal probabilities in state {state} sum to {total}"
                )));
            }
        }
        Ok(SignalingScheme { signals, cond })
    }

    /// Scheme that sends the same signal regardless of the state.
    pub fn uninformative(num_states: usize) -> Self {
        SignalingScheme {
            signals: vec!["none".into()],
            cond: vec![vec![1.0; num_states]],
        }
    }

    /// Scheme whose signal is the state itself.
    pub fn fully_informative(instance: &Instance) -> Self {
        let n = instance.num_states();
        SignalingScheme {
            signals: instance.states().to_vec(),
            cond: (0..n).map(|s| Belief::vertex(n, s).probs().to_vec()).collect(),
        }
    }

    pub fn signals(&self) -> &[String] {
        &self.signals
    }

    pub fn num_signals(&self) -> usize {
        self.signals.len()
    }

    pub fn num_states(&self) -> usize {
        self.cond[0].len()
    }

    pub fn cond(&self) -> &[Vec<f64>] {
        &self.cond
    }

    /// `π(s | θ)`.
    pub fn prob(&self, signal: usize, state: usize) -> f64 {
        self.cond[signal][state]
    }

    pub fn signal_index(&self, label: &str) -> Result<usize> {
        self.signals
            .iter()
            .position(|s| s == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Unconditional probability `π(s) = Σ_θ μ0(θ) π(s|θ)`.
    pub fn signal_prob(&self, prior: &Belief, signal: usize) -> f64 {
        prior.dot(&self.cond[signal])
    }

    pub fn signal_probs(&self, prior: &Belief) -> Vec<f64> {
        (0..self.num_signals()).map(|s| self.signal_prob(prior, s)).collect()
    }

    pub(crate) fn check_fits(&self, instance: &Instance) -> Result<()> {
        if self.num_states() != instance.num_states() {
            return Err(Error::ShapeMismatch(format!(
                "scheme covers {} states, instance has {}",
                self.num_states(),
                instance.num_states()
            )));
        }
        Ok(())
    }

    #[cfg(test)]
    pub(crate) fn from_raw(signals: Vec<String>, cond: Vec<Vec<f64>>) -> Self {
        SignalingScheme { signals, cond }
    }
}

/// Bayes posterior `μ_s(θ) = μ0(θ) π(s|θ) / π(s)`.
pub fn bayes_posterior(instance: &Instance, scheme: &SignalingScheme, signal: usize) -> Result<Belief> {
    scheme.check_fits(instance)?;
    let prior = instance.prior();
    let total = scheme.signal_prob(prior, signal);
    if total <= ZERO_SIGNAL {
        return Err(Error::ZeroProbabilitySignal(scheme.signals[signal].clone()));
    }
    Ok(Belief::from_raw(
        prior
            .probs()
            .iter()
            .zip(&scheme.cond[signal])
            .map(|(p, c)| p * c / total)
            .collect(),
    ))
}

/// Sup-norm distance between the prior and the probability-weighted average
/// of the posteriors. Zero-probability signals are skipped.
pub fn splitting_check(instance: &Instance, scheme: &SignalingScheme) -> Result<f64> {
    scheme.check_fits(instance)?;
    let mut mean = vec![0.0; instance.num_states()];
    for s in 0..scheme.num_signals() {
        let weight = scheme.signal_prob(instance.prior(), s);
        if weight <= ZERO_SIGNAL {
            continue;
        }
        let post = bayes_posterior(instance, scheme, s)?;
        for (m, p) in mean.iter_mut().zip(post.probs()) {
            *m += weight * p;
        }
    }
    Ok(Belief::from_raw(mean).distance(instance.prior()))
}

/// Inverse of the splitting identity: a scheme that sends signal `s` with
/// probability `weights[s]` and induces posterior `posteriors[s]`.
pub fn scheme_from_posteriors(instance: &Instance, weights: &[f64], posteriors: &[Belief]) -> Result<SignalingScheme> {
    let labels = (0..weights.len()).map(|i| format!("s{i}")).collect();
    scheme_from_posteriors_labeled(instance, labels, weights, posteriors)
}

pub fn scheme_from_posteriors_labeled(
    instance: &Instance,
    labels: Vec<String>,
    weights: &[f64],
    posteriors: &[Belief],
) -> Result<SignalingScheme> {
    if weights.len() != posteriors.len() || weights.len() != labels.len() || weights.is_empty() {
        return Err(Error::ShapeMismatch(
            "one weight and label per posterior required".into(),
        ));
    }
    if posteriors.iter().any(|p| p.dim() != instance.num_states()) {
        return Err(Error::ShapeMismatch("posterior dimension differs from instance".into()));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || (weights.iter().sum::<f64>() - 1.0).abs() > TOL {
        return Err(Error::InvalidScheme(
            "split weights are not a probability vector".into(),
        ));
    }

    let prior = instance.prior();
    let mut mean = vec![0.0; instance.num_states()];
    for (w, post) in weights.iter().zip(posteriors) {
        for (m, p) in mean.iter_mut().zip(post.probs()) {
            *m += w * p;
        }
    }
    let residual = Belief::from_raw(mean).distance(prior);
    if residual > TOL {
        return Err(Error::InconsistentSplit { residual });
    }

    let mut cond: Vec<Vec<f64>> = weights
        .iter()
        .zip(posteriors)
        .map(|(w, post)| {
            prior
                .probs()
                .iter()
                .zip(post.probs())
                .map(|(mu, p)| if *mu > 0.0 { w * p / mu } else { *w })
                .collect()
        })
        .collect();
    // absorb rounding so every state row sums to one
    for state in 0..instance.num_states() {
        let total: f64 = cond.iter().map(|row| row[state]).sum();
        for row in cond.iter_mut() {
            row[state] /= total;
        }
    }
    SignalingScheme::new(labels, cond)
}
