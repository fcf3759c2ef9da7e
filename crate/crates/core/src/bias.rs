//! General bias models `φ(μ0, μ, w)`.
//!
//! A bias function maps the prior, the true posterior and the bias level to
//! the belief the agent acts on. The linear model mixes prior and posterior;
//! [`WarpedLinear`] walks the same segment at speed `w^γ`. Outside the linear
//! model there is no optimal-design program, so [`construct_finite_scheme`]
//! builds a valid (finite sample complexity) scheme by bisecting from the
//! prior towards a state vertex until the τ-biased belief reaches the
//! boundary of the default region.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::belief::Belief;
use crate::design::check_threshold;
use crate::error::{Error, Result};
use crate::geometry::{default_margin, gap_vector, gap_vectors};
use crate::instance::Instance;
use crate::scheme::{scheme_from_posteriors_labeled, SignalingScheme};
use crate::TOL;

/// Bias levels probed when scanning a belief path.
const SCAN_STEPS: usize = 100;
const BISECTION_WIDTH: f64 = 1e-13;

pub trait BiasFunction {
    fn name(&self) -> String;

    /// Belief held by an agent at bias level `w` whose Bayesian posterior is `posterior`.
    fn apply(&self, prior: &Belief, posterior: &Belief, w: f64) -> Belief;
}

impl<T: BiasFunction + ?Sized> BiasFunction for &T {
    fn name(&self) -> String {
        (**self).name()
    }

    fn apply(&self, prior: &Belief, posterior: &Belief, w: f64) -> Belief {
        (**self).apply(prior, posterior, w)
    }
}

impl<T: BiasFunction + ?Sized> BiasFunction for Box<T> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn apply(&self, prior: &Belief, posterior: &Belief, w: f64) -> Belief {
        (**self).apply(prior, posterior, w)
    }
}

/// `w μ0 + (1 - w) μ`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LinearBias;

impl BiasFunction for LinearBias {
    fn name(&self) -> String {
        "linear".into()
    }

    fn apply(&self, prior: &Belief, posterior: &Belief, w: f64) -> Belief {
        prior.mix(posterior, w)
    }
}

/// `w^γ μ0 + (1 - w^γ) μ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpedLinear {
    gamma: f64,
}

impl WarpedLinear {
    pub fn new(gamma: f64) -> Result<Self> {
        if gamma.is_finite() && gamma > 0.0 {
            Ok(WarpedLinear { gamma })
        } else {
            Err(Error::DegenerateParameters(format!(
                "warp exponent must be positive, got {gamma}"
            )))
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

impl BiasFunction for WarpedLinear {
    fn name(&self) -> String {
        format!("warped(gamma={})", self.gamma)
    }

    fn apply(&self, prior: &Belief, posterior: &Belief, w: f64) -> Belief {
        prior.mix(posterior, w.powf(self.gamma))
    }
}

/// Bias model selection as it appears in configuration:
/// `{"bias_model": "linear"}` or `{"bias_model": "warped", "gamma": 2.0}`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "bias_model", rename_all = "lowercase")]
pub enum BiasModel {
    #[default]
    Linear,
    Warped {
        gamma: f64,
    },
}

impl BiasModel {
    pub fn validate(self) -> Result<Self> {
        if let BiasModel::Warped { gamma } = self {
            WarpedLinear::new(gamma)?;
        }
        Ok(self)
    }
}

impl BiasFunction for BiasModel {
    fn name(&self) -> String {
        match self {
            BiasModel::Linear => LinearBias.name(),
            BiasModel::Warped { gamma } => WarpedLinear { gamma: *gamma }.name(),
        }
    }

    fn apply(&self, prior: &Belief, posterior: &Belief, w: f64) -> Belief {
        match self {
            BiasModel::Linear => LinearBias.apply(prior, posterior, w),
            BiasModel::Warped { gamma } => WarpedLinear { gamma: *gamma }.apply(prior, posterior, w),
        }
    }
}

/// Whether `phi` maps posteriors to themselves at `w = 0` and to the prior at `w = 1`.
pub fn check_endpoints<B: BiasFunction + ?Sized>(phi: &B, prior: &Belief, posterior: &Belief) -> bool {
    phi.apply(prior, posterior, 0.0).distance(posterior) <= TOL
        && phi.apply(prior, posterior, 1.0).distance(prior) <= TOL
}

fn scan_grid() -> impl Iterator<Item = f64> {
    (0..=SCAN_STEPS).map(|k| k as f64 / SCAN_STEPS as f64)
}

/// Default-region margin along the path `w ↦ φ(μ0, μ, w)`.
fn path_margin<B: BiasFunction + ?Sized>(phi: &B, instance: &Instance, posterior: &Belief, w: f64) -> f64 {
    default_margin(instance, &phi.apply(instance.prior(), posterior, w))
}

/// Sign changes in a scanned margin sequence, ignoring values within tolerance
/// of zero. Returns the count and whether any change went from inside to outside.
fn sign_changes(values: impl IntoIterator<Item = f64>) -> (usize, bool) {
    let mut last: Option<bool> = None;
    let mut changes = 0;
    let mut exits = false;
    for v in values {
        if v.abs() <= TOL {
            continue;
        }
        let inside = v > 0.0;
        if let Some(prev) = last {
            if prev != inside {
                changes += 1;
                exits |= prev;
            }
        }
        last = Some(inside);
    }
    (changes, exits)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub passed: bool,
    /// First witness found against the assumption.
    pub counterexample: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub bias_model: String,
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Uniform draw from the face of the simplex spanned by the prior's support.
pub fn random_posterior<R: Rng + ?Sized>(instance: &Instance, rng: &mut R) -> Belief {
    let mut probs = vec![0.0; instance.num_states()];
    for s in instance.support() {
        probs[s] = -(1.0 - rng.random::<f64>()).ln();
    }
    let total: f64 = probs.iter().sum();
    Belief::from_raw(probs.into_iter().map(|p| p / total).collect())
}

/// Probes the regularity assumptions on `phi` for `instance`: endpoint
/// identities, the uninformed agent keeping the default action, single
/// crossing of the default-region boundary for outside posteriors, and inside
/// posteriors never leaving the region.
pub fn check_assumptions<B, R>(phi: &B, instance: &Instance, probes: usize, rng: &mut R) -> AssumptionReport
where
    B: BiasFunction + ?Sized,
    R: Rng + ?Sized,
{
    let prior = instance.prior();
    let mut posteriors: Vec<Belief> = instance
        .support()
        .map(|s| Belief::vertex(instance.num_states(), s))
        .collect();
    posteriors.extend((0..probes).map(|_| random_posterior(instance, rng)));

    let mut endpoints = None;
    let mut single_crossing = None;
    let mut interior = None;
    for mu in &posteriors {
        if endpoints.is_none() && !check_endpoints(phi, prior, mu) {
            endpoints = Some(format!("posterior {:?}", mu.probs()));
        }
        let margins: Vec<(f64, f64)> = scan_grid().map(|w| (w, path_margin(phi, instance, mu, w))).collect();
        if default_margin(instance, mu) > TOL {
            if interior.is_none() {
                if let Some((w, m)) = margins.iter().find(|(_, m)| *m <= TOL) {
                    interior = Some(format!(
                        "posterior {:?} leaves the default region at w = {w} (margin {m:e})",
                        mu.probs()
                    ));
                }
            }
        } else if single_crossing.is_none() {
            let (changes, exits) = sign_changes(margins.iter().map(|(_, m)| *m));
            let ends_inside = margins.last().is_some_and(|(_, m)| *m > TOL);
            if changes > 1 || exits || !ends_inside {
                let flips: Vec<f64> = margins
                    .windows(2)
                    .filter(|p| (p[0].1 > TOL) != (p[1].1 > TOL))
                    .map(|p| p[1].0)
                    .collect();
                single_crossing = Some(format!(
                    "posterior {:?} crosses the boundary {changes} times near w = {flips:?}",
                    mu.probs()
                ));
            }
        }
    }
    let no_information = scan_grid()
        .map(|w| (w, path_margin(phi, instance, prior, w)))
        .find(|(_, m)| *m <= TOL)
        .map(|(w, m)| format!("uninformed agent leaves the default action at w = {w} (margin {m:e})"));

    let check = |name, counterexample: Option<String>| AssumptionCheck {
        name,
        passed: counterexample.is_none(),
        counterexample,
    };
    AssumptionReport {
        bias_model: phi.name(),
        checks: vec![
            check("endpoints", endpoints),
            check("no_information_default", no_information),
            check("single_crossing", single_crossing),
            check("interior_stays", interior),
        ],
    }
}

/// Bias level at which the agent's belief path from `posterior` enters the
/// default region, or `None` if the posterior is already inside it.
pub fn crossing_level<B: BiasFunction + ?Sized>(
    phi: &B,
    instance: &Instance,
    posterior: &Belief,
) -> Result<Option<f64>> {
    let margin = |w: f64| path_margin(phi, instance, posterior, w);
    if margin(0.0) > TOL {
        return Ok(None);
    }
    let (changes, exits) = sign_changes(scan_grid().map(margin));
    if changes > 1 || exits {
        return Err(Error::NotSingleCrossing { crossings: changes });
    }
    if margin(1.0) <= TOL {
        return Err(Error::NotSingleCrossing { crossings: 0 });
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        if margin(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(if margin(lo).abs() <= margin(hi).abs() { lo } else { hi }))
}

/// Whether an agent at bias `tau` holding posterior `mu` is indifferent
/// between `action` and the default while weakly preferring the default to
/// everything else.
pub fn generalized_membership<B: BiasFunction + ?Sized>(
    phi: &B,
    instance: &Instance,
    mu: &Belief,
    action: usize,
    tau: f64,
) -> Result<bool> {
    check_threshold(tau)?;
    let belief = phi.apply(instance.prior(), mu, tau);
    let gap = gap_vector(instance, action)?;
    Ok(gap.dot(&belief).abs() <= TOL && gap_vectors(instance).iter().all(|g| g.dot(&belief) >= -TOL))
}

/// A finite-sample threshold scheme built by vertex bisection.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteScheme {
    pub tau: f64,
    /// Signal 0 carries the boundary posterior; the others reveal single states.
    pub scheme: SignalingScheme,
    pub useful_signal: usize,
    /// Probability of the boundary signal.
    pub useful_mass: f64,
    pub boundary_posterior: Belief,
    /// State whose vertex the boundary posterior lies towards.
    pub vertex: usize,
}

/// Boundary point on the segment from the prior to `e_state`, if the τ-biased
/// image of the vertex is outside the default region.
fn boundary_towards<B: BiasFunction + ?Sized>(
    phi: &B,
    instance: &Instance,
    state: usize,
    tau: f64,
) -> Result<Option<Belief>> {
    let prior = instance.prior();
    let vertex = Belief::vertex(instance.num_states(), state);
    let along = |t: f64| vertex.mix(prior, t);
    let margin = |t: f64| default_margin(instance, &phi.apply(prior, &along(t), tau));
    if margin(1.0) > TOL {
        return Ok(None);
    }
    if margin(0.0) <= TOL {
        // The uninformed agent already leaves the default action.
        return Err(Error::NotSingleCrossing { crossings: 0 });
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        if margin(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = if margin(lo).abs() <= margin(hi).abs() { lo } else { hi };
    if margin(t).abs() > TOL {
        return Err(Error::NotSingleCrossing { crossings: 1 });
    }
    Ok(Some(along(t)))
}

/// Builds a scheme with one boundary signal and one state-revealing signal per
/// remaining reachable state. Among qualifying vertices the one giving the
/// largest boundary-signal probability is used.
pub fn construct_finite_scheme<B: BiasFunction + ?Sized>(
    phi: &B,
    instance: &Instance,
    tau: f64,
) -> Result<FiniteScheme> {
    check_threshold(tau)?;
    let prior = instance.prior();
    let mut best: Option<(usize, Belief, f64)> = None;
    for state in instance.support() {
        if let Some(post) = boundary_towards(phi, instance, state, tau)? {
            let weight = prior[state] / post[state];
            if best.as_ref().is_none_or(|(_, _, w)| weight > *w) {
                best = Some((state, post, weight));
            }
        }
    }
    let Some((vertex, boundary, weight)) = best else {
        return Err(Error::Untestable { tau });
    };

    let n = instance.num_states();
    let mut labels = vec!["boundary".to_string()];
    let mut weights = vec![weight];
    let mut posteriors = vec![boundary.clone()];
    for state in instance.support().filter(|&s| s != vertex) {
        labels.push(instance.states()[state].clone());
        weights.push((prior[state] - weight * boundary[state]).max(0.0));
        posteriors.push(Belief::vertex(n, state));
    }
    // the vertex coordinate is matched exactly by construction
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    let scheme = scheme_from_posteriors_labeled(instance, labels, &weights, &posteriors)?;
    let useful_mass = scheme.signal_prob(prior, 0);
    Ok(FiniteScheme {
        tau,
        scheme,
        useful_signal: 0,
        useful_mass,
        boundary_posterior: boundary,
        vertex,
    })
}
