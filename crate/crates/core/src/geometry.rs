//! Indifference-set geometry on the belief simplex.
//!
//! For a non-default action `a`, the gap vector `c_a = U(a0,·) - U(a,·)`
//! splits the simplex: `c_a·μ > 0` where `a0` beats `a`. The default region
//! is where every gap is positive. An agent at bias τ is indifferent between
//! `a` and `a0` exactly on true posteriors with `c_a·μ = -τ/(1-τ) c_a·μ0`,
//! a hyperplane parallel to the unbiased indifference set.

use serde::Serialize;

use crate::belief::Belief;
use crate::design::{check_threshold, solve_design};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::TOL;

#[derive(Debug, Clone, PartialEq)]
pub struct GapVector {
    pub action: usize,
    pub coeffs: Vec<f64>,
}

impl GapVector {
    pub fn dot(&self, belief: &Belief) -> f64 {
        belief.dot(&self.coeffs)
    }
}

pub fn gap_vector(instance: &Instance, action: usize) -> Result<GapVector> {
    let a0 = instance.default_action();
    if action == a0 {
        return Err(Error::DefaultActionGap);
    }
    if action >= instance.num_actions() {
        return Err(Error::UnknownLabel(format!("action #{action}")));
    }
    let u = instance.utility();
    let coeffs: Vec<f64> = u[a0].iter().zip(&u[action]).map(|(x, y)| x - y).collect();
    debug_assert!(instance.prior().dot(&coeffs) > TOL);
    Ok(GapVector { action, coeffs })
}

pub fn gap_vectors(instance: &Instance) -> Vec<GapVector> {
    (0..instance.num_actions())
        .filter(|&a| a != instance.default_action())
        .map(|a| gap_vector(instance, a).expect("non-default action"))
        .collect()
}

/// `min_a c_a·μ`: positive inside the default region, zero on its boundary,
/// negative outside.
pub fn default_margin(instance: &Instance, belief: &Belief) -> f64 {
    gap_vectors(instance)
        .iter()
        .map(|g| g.dot(belief))
        .fold(f64::INFINITY, f64::min)
}

/// Right-hand side of the translated indifference hyperplane `c_a·μ = offset`.
pub fn indifference_offset(instance: &Instance, action: usize, tau: f64) -> Result<f64> {
    check_threshold(tau)?;
    let gap = gap_vector(instance, action)?;
    Ok(-tau / (1.0 - tau) * gap.dot(instance.prior()))
}

/// Smallest gap coefficient over states the prior can reach.
fn min_supported(instance: &Instance, gap: &GapVector) -> f64 {
    instance.support().map(|s| gap.coeffs[s]).fold(f64::INFINITY, f64::min)
}

/// Whether the translated indifference hyperplane meets the reachable face of the simplex.
pub fn translated_set_nonempty(instance: &Instance, action: usize, tau: f64) -> Result<bool> {
    let offset = indifference_offset(instance, action, tau)?;
    let gap = gap_vector(instance, action)?;
    Ok(min_supported(instance, &gap) <= offset + TOL)
}

/// Largest threshold at which some translated indifference set is nonempty.
pub fn testable_range(instance: &Instance) -> f64 {
    gap_vectors(instance)
        .iter()
        .map(|gap| {
            let r = (-min_supported(instance, gap)).max(0.0) / gap.dot(instance.prior());
            r / (1.0 + r)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    SingleSample,
    Finite,
    Untestable,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::SingleSample => "single_sample",
            Verdict::Finite => "finite",
            Verdict::Untestable => "untestable",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub tau: f64,
    pub verdict: Verdict,
    /// Optimal useful-signal mass; `None` when untestable.
    pub useful_mass: Option<f64>,
    pub tau_max: f64,
    pub nonempty_actions: Vec<usize>,
}

impl Classification {
    pub fn to_json(&self, instance: &Instance) -> serde_json::Value {
        let names: Vec<&str> = self
            .nonempty_actions
            .iter()
            .map(|&a| instance.actions()[a].as_str())
            .collect();
        serde_json::json!({
            "verdict": self.verdict,
            "p_star": self.useful_mass,
            "tau_max": self.tau_max,
            "nonempty_actions": names,
        })
    }
}

/// Decides whether threshold `tau` can be tested in one round, in finitely
/// many rounds, or not at all.
pub fn classify(instance: &Instance, tau: f64) -> Result<Classification> {
    check_threshold(tau)?;
    let mut nonempty_actions = Vec::new();
    for gap in gap_vectors(instance) {
        if translated_set_nonempty(instance, gap.action, tau)? {
            nonempty_actions.push(gap.action);
        }
    }
    let design = solve_design(instance, tau)?;
    let lp_testable = design.useful_mass > TOL;
    if lp_testable == nonempty_actions.is_empty() {
        return Err(Error::InconsistentClassification { tau });
    }
    let verdict = if !lp_testable {
        Verdict::Untestable
    } else if design.useful_mass >= 1.0 - TOL {
        Verdict::SingleSample
    } else {
        Verdict::Finite
    };
    Ok(Classification {
        tau,
        verdict,
        useful_mass: lp_testable.then_some(design.useful_mass),
        tau_max: testable_range(instance),
        nonempty_actions,
    })
}
