//! Problem instances: states, actions, common prior and utilities.

use serde::{Deserialize, Serialize};

use crate::belief::Belief;
use crate::error::{Error, Result};
use crate::TOL;

/// Raw instance description as found in an instance file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub prior: Vec<f64>,
    /// Rows are actions, columns are states.
    pub utility: Vec<Vec<f64>>,
}

impl InstanceFile {
    pub fn validate(self) -> Result<Instance> {
        Instance::new(self.states, self.actions, self.prior, self.utility)
    }
}

/// A validated decision problem with a unique default action at the prior.
///
/// Actions and states are addressed by their index in the label lists.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    states: Vec<String>,
    actions: Vec<String>,
    prior: Belief,
    utility: Vec<Vec<f64>>,
    default_action: usize,
    prior_margin: f64,
}

fn check_labels(kind: &str, labels: &[String]) -> Result<()> {
    if labels.len() < 2 {
        return Err(Error::ShapeMismatch(format!(
            "need at least 2 {kind}, got {}",
            labels.len()
        )));
    }
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(Error::ShapeMismatch(format!("duplicate {kind} label `{l}`")));
        }
    }
    Ok(())
}

impl Instance {
    pub fn new(states: Vec<String>, actions: Vec<String>, prior: Vec<f64>, utility: Vec<Vec<f64>>) -> Result<Self> {
        check_labels("states", &states)?;
        check_labels("actions", &actions)?;
        if prior.len() != states.len() {
            return Err(Error::ShapeMismatch(format!(
                "prior has {} entries for {} states",
                prior.len(),
                states.len()
            )));
        }
        if utility.len() != actions.len() {
            return Err(Error::ShapeMismatch(format!(
                "utility has {} rows for {} actions",
                utility.len(),
                actions.len()
            )));
        }
        if let Some(row) = utility.iter().find(|r| r.len() != states.len()) {
            return Err(Error::ShapeMismatch(format!(
                "utility row has {} entries for {} states",
                row.len(),
                states.len()
            )));
        }
        if utility.iter().flatten().any(|u| !u.is_finite()) {
            return Err(Error::ShapeMismatch("utility entries must be finite".into()));
        }
        let prior = Belief::new(prior).map_err(|e| match e {
            Error::InvalidBelief(msg) => Error::NonSimplexPrior(msg),
            other => other,
        })?;

        let values: Vec<f64> = utility.iter().map(|row| prior.dot(row)).collect();
        let default_action = argmax(&values);
        let runner_up = values
            .iter()
            .enumerate()
            .filter(|&(a, _)| a != default_action)
            .map(|(_, v)| *v)
            .fold(f64::NEG_INFINITY, f64::max);
        let prior_margin = values[default_action] - runner_up;
        if prior_margin <= TOL {
            return Err(Error::NoUniqueDefault { margin: prior_margin });
        }

        Ok(Instance {
            states,
            actions,
            prior,
            utility,
            default_action,
            prior_margin,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<InstanceFile>(text)?.validate()
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            states: self.states.clone(),
            actions: self.actions.clone(),
            prior: self.prior.probs().to_vec(),
            utility: self.utility.clone(),
        }
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn prior(&self) -> &Belief {
        &self.prior
    }

    /// `U[action][state]`.
    pub fn utility(&self) -> &[Vec<f64>] {
        &self.utility
    }

    /// The action that is strictly optimal at the prior.
    pub fn default_action(&self) -> usize {
        self.default_action
    }

    /// Expected-utility lead of the default action over the runner-up at the prior.
    pub fn prior_margin(&self) -> f64 {
        self.prior_margin
    }

    /// States with positive prior mass. Posteriors never charge the others.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.prior
            .probs()
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(i, _)| i)
    }

    pub fn action_index(&self, label: &str) -> Result<usize> {
        self.actions
            .iter()
            .position(|a| a == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn state_index(&self, label: &str) -> Result<usize> {
        self.states
            .iter()
            .position(|s| s == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn expected_utility(&self, action: usize, belief: &Belief) -> f64 {
        belief.dot(&self.utility[action])
    }

    /// Same problem with every utility multiplied by `factor` (must be positive).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Instance::new(
            self.states.clone(),
            self.actions.clone(),
            self.prior.probs().to_vec(),
            self.utility
                .iter()
                .map(|row| row.iter().map(|u| u * factor).collect())
                .collect(),
        )
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// How an agent picks among actions whose expected utilities tie within tolerance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    /// The default action if it is among the tied ones, otherwise the first tied action.
    #[default]
    PreferDefault,
    /// The first tied action other than the default, if any.
    PreferNonDefault,
    /// The first tied action in instance order.
    FixedOrder,
}

impl std::str::FromStr for TieBreak {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prefer-default" => Ok(TieBreak::PreferDefault),
            "prefer-non-default" => Ok(TieBreak::PreferNonDefault),
            "fixed-order" => Ok(TieBreak::FixedOrder),
            other => Err(Error::Parse(format!("unknown tie-break rule `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestResponse {
    pub action: usize,
    pub expected_utility: f64,
    /// At least two actions are within tolerance of the maximum.
    pub tie: bool,
}

pub fn best_response(instance: &Instance, belief: &Belief, tiebreak: TieBreak) -> BestResponse {
    let values: Vec<f64> = (0..instance.num_actions())
        .map(|a| instance.expected_utility(a, belief))
        .collect();
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = (0..values.len()).filter(|&a| best - values[a] <= TOL).collect();
    let a0 = instance.default_action();
    let action = match tiebreak {
        TieBreak::PreferDefault if tied.contains(&a0) => a0,
        TieBreak::PreferNonDefault => tied.iter().copied().find(|&a| a != a0).unwrap_or(tied[0]),
        _ => tied[0],
    };
    BestResponse {
        action,
        expected_utility: values[action],
        tie: tied.len() > 1,
    }
}
