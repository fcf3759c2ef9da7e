//! Points of the probability simplex over states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::TOL;

/// A probability vector over the states of an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Belief(Vec<f64>);

impl Belief {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidBelief("empty probability vector".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidBelief(format!("entry {p} is not a probability")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > TOL {
            return Err(Error::InvalidBelief(format!("entries sum to {sum}")));
        }
        Ok(Belief(probs))
    }

    /// Point mass on `state`.
    pub fn vertex(dim: usize, state: usize) -> Self {
        assert!(state < dim, "vertex {state} outside dimension {dim}");
        let mut probs = vec![0.0; dim];
        probs[state] = 1.0;
        Belief(probs)
    }

    pub fn uniform(dim: usize) -> Self {
        assert!(dim > 0);
        Belief(vec![1.0 / dim as f64; dim])
    }

    /// `weight * self + (1 - weight) * other`. Both inputs are simplex
    /// points, so the result is one for any weight in [0, 1].
    pub fn mix(&self, other: &Belief, weight: f64) -> Belief {
        debug_assert_eq!(self.dim(), other.dim());
        Belief(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| (weight * a + (1.0 - weight) * b).max(0.0))
                .collect(),
        )
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, coeffs: &[f64]) -> f64 {
        self.0.iter().zip(coeffs).map(|(p, c)| p * c).sum()
    }

    /// Sup-norm distance.
    pub fn distance(&self, other: &Belief) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        Belief(probs)
    }
}

impl TryFrom<Vec<f64>> for Belief {
    type Error = Error;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        Belief::new(probs)
    }
}

impl From<Belief> for Vec<f64> {
    fn from(b: Belief) -> Self {
        b.0
    }
}

impl std::ops::Index<usize> for Belief {
    type Output = f64;

    fn index(&self, state: usize) -> &f64 {
        &self.0[state]
    }
}

/// Linear biased belief `w * prior + (1 - w) * posterior`.
pub fn biased_belief(prior: &Belief, posterior: &Belief, w: f64) -> Result<Belief> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::OutOfRangeBias(w));
    }
    if prior.dim() != posterior.dim() {
        return Err(Error::ShapeMismatch(format!(
            "prior has {} states, posterior {}",
            prior.dim(),
            posterior.dim()
        )));
    }
    Ok(prior.mix(posterior, w))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(v: &[f64]) -> Belief {
        Belief::new(v.to_vec()).unwrap()
    }

    #[test]
    fn rejects_non_simplex() {
        assert!(Belief::new(vec![0.5, 0.6]).is_err());
        assert!(Belief::new(vec![-0.1, 1.1]).is_err());
        assert!(Belief::new(vec![f64::NAN, 1.0]).is_err());
        assert!(Belief::new(vec![]).is_err());
    }

    #[test]
    fn biased_belief_endpoints() {
        let prior = b(&[0.2, 0.8]);
        let post = b(&[0.8, 0.2]);
        assert_eq!(biased_belief(&prior, &post, 0.0).unwrap(), post);
        assert_eq!(biased_belief(&prior, &post, 1.0).unwrap(), prior);
        let mid = biased_belief(&prior, &post, 0.5).unwrap();
        assert!(mid.distance(&b(&[0.5, 0.5])) < 1e-15);
    }

    #[test]
    fn biased_belief_range() {
        let prior = b(&[0.2, 0.8]);
        assert_eq!(biased_belief(&prior, &prior, 1.5), Err(Error::OutOfRangeBias(1.5)));
        assert!(biased_belief(&prior, &prior, -0.01).is_err());
    }

    #[test]
    fn serde_validates() {
        let ok: Belief = serde_json::from_str("[0.25, 0.75]").unwrap();
        assert_eq!(ok.probs(), &[0.25, 0.75]);
        assert!(serde_json::from_str::<Belief>("[0.5, 0.6]").is_err());
    }
}
