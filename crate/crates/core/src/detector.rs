//! The principal's side: threshold tests, their sample complexity, and the
//! binary-search estimator of the bias level.

use std::cell::RefCell;
use std::collections::HashMap;

use rand::Rng;
use serde::Serialize;

use crate::agent::{BiasedAgent, Episode};
use crate::belief::Belief;
use crate::bias::{construct_finite_scheme, crossing_level, BiasFunction, FiniteScheme};
use crate::design::{design_scheme, DesignResult};
use crate::error::{Error, Result};
use crate::geometry::testable_range;
use crate::instance::Instance;
use crate::scheme::SignalingScheme;

/// Confidence level used for the default step budget of a threshold test.
pub const DEFAULT_DELTA: f64 = 1e-9;

/// A constant scheme together with the signals whose response answers the
/// threshold question.
#[derive(Debug, Clone, PartialEq)]
pub struct TestPlan {
    pub tau: f64,
    pub scheme: SignalingScheme,
    pub useful: Vec<bool>,
    /// Probability that a useful signal is sent in one round.
    pub useful_mass: f64,
}

impl TestPlan {
    pub fn from_design(instance: &Instance, design: DesignResult) -> Self {
        let a0 = instance.default_action();
        let prior = instance.prior();
        let useful: Vec<bool> = (0..design.scheme.num_signals())
            .map(|a| a != a0 && design.scheme.signal_prob(prior, a) > 0.0)
            .collect();
        TestPlan {
            tau: design.tau,
            scheme: design.scheme,
            useful,
            useful_mass: design.useful_mass,
        }
    }

    pub fn from_finite(finite: FiniteScheme) -> Self {
        let mut useful = vec![false; finite.scheme.num_signals()];
        useful[finite.useful_signal] = true;
        TestPlan {
            tau: finite.tau,
            scheme: finite.scheme,
            useful,
            useful_mass: finite.useful_mass,
        }
    }

    /// Step budget after which a useful signal has arrived with probability `1 - δ`.
    pub fn default_max_steps(&self) -> usize {
        steps_for_confidence(self.useful_mass, DEFAULT_DELTA)
            .map(|h| h.exact)
            .unwrap_or(1)
    }

    /// Plays rounds until a useful signal is sent and reads the agent's answer.
    pub fn run<B: BiasFunction, R: Rng + ?Sized>(
        &self,
        instance: &Instance,
        agent: &BiasedAgent<B>,
        rng: &mut R,
        max_steps: usize,
        record: bool,
    ) -> Result<ThresholdVerdict> {
        if max_steps == 0 {
            return Err(Error::DegenerateParameters("max_steps must be at least 1".into()));
        }
        let mut trace = record.then(Vec::new);
        for step in 1..=max_steps {
            let episode = agent.sample_episode(instance, &self.scheme, rng)?;
            if let Some(t) = trace.as_mut() {
                t.push(episode);
            }
            if self.useful[episode.signal] {
                let verdict = if episode.action == instance.default_action() {
                    Direction::GEq
                } else {
                    Direction::LEq
                };
                return Ok(ThresholdVerdict {
                    verdict,
                    steps: step,
                    trace,
                });
            }
        }
        Err(Error::Timeout { max_steps })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// The agent kept the default action: `w ≥ τ`.
    GEq,
    /// The agent left the default action: `w ≤ τ`.
    LEq,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdVerdict {
    pub verdict: Direction,
    pub steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<Episode>>,
}

/// Produces threshold-test plans for an instance.
pub trait Designer {
    fn plan(&self, instance: &Instance, tau: f64) -> Result<TestPlan>;

    /// Largest testable threshold (0 when nothing is testable).
    fn testable_max(&self, instance: &Instance) -> Result<f64>;
}

impl<D: Designer + ?Sized> Designer for &D {
    fn plan(&self, instance: &Instance, tau: f64) -> Result<TestPlan> {
        (**self).plan(instance, tau)
    }

    fn testable_max(&self, instance: &Instance) -> Result<f64> {
        (**self).testable_max(instance)
    }
}

/// Optimal direct schemes for the linear bias model.
#[derive(Debug, Default, Clone, Copy)]
pub struct LpDesigner;

impl Designer for LpDesigner {
    fn plan(&self, instance: &Instance, tau: f64) -> Result<TestPlan> {
        Ok(TestPlan::from_design(instance, design_scheme(instance, tau)?))
    }

    fn testable_max(&self, instance: &Instance) -> Result<f64> {
        Ok(testable_range(instance))
    }
}

/// Vertex-bisection schemes for an arbitrary single-crossing bias model.
#[derive(Debug, Clone)]
pub struct FiniteDesigner<B> {
    pub bias: B,
}

impl<B: BiasFunction> Designer for FiniteDesigner<B> {
    fn plan(&self, instance: &Instance, tau: f64) -> Result<TestPlan> {
        Ok(TestPlan::from_finite(construct_finite_scheme(
            &self.bias, instance, tau,
        )?))
    }

    /// A vertex stays usable exactly up to the level at which its belief path
    /// enters the default region.
    fn testable_max(&self, instance: &Instance) -> Result<f64> {
        let mut best = 0.0_f64;
        for s in instance.support() {
            let vertex = Belief::vertex(instance.num_states(), s);
            if let Some(level) = crossing_level(&self.bias, instance, &vertex)? {
                best = best.max(level);
            }
        }
        Ok(best)
    }
}

/// Memoizes plans per threshold.
pub struct CachedDesigner<D> {
    inner: D,
    plans: RefCell<HashMap<u64, TestPlan>>,
}

impl<D: Designer> CachedDesigner<D> {
    pub fn new(inner: D) -> Self {
        CachedDesigner {
            inner,
            plans: RefCell::new(HashMap::new()),
        }
    }
}

impl<D: Designer> Designer for CachedDesigner<D> {
    fn plan(&self, instance: &Instance, tau: f64) -> Result<TestPlan> {
        if let Some(plan) = self.plans.borrow().get(&tau.to_bits()) {
            return Ok(plan.clone());
        }
        let plan = self.inner.plan(instance, tau)?;
        self.plans.borrow_mut().insert(tau.to_bits(), plan.clone());
        Ok(plan)
    }

    fn testable_max(&self, instance: &Instance) -> Result<f64> {
        self.inner.testable_max(instance)
    }
}

/// Runs the optimal constant scheme for `tau` until the first useful signal.
/// `max_steps` defaults to the horizon reached with probability `1 - 1e-9`.
pub fn threshold_test<R: Rng + ?Sized>(
    instance: &Instance,
    tau: f64,
    agent: &BiasedAgent,
    rng: &mut R,
    max_steps: Option<usize>,
) -> Result<ThresholdVerdict> {
    let plan = LpDesigner.plan(instance, tau)?;
    let max_steps = max_steps.unwrap_or_else(|| plan.default_max_steps());
    plan.run(instance, agent, rng, max_steps, false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConfidenceHorizon {
    /// Smallest `t` with `(1 - p)^t ≤ δ`.
    pub exact: usize,
    /// `ceil(ln(1/δ) / p)`.
    pub bound: usize,
}

pub fn steps_for_confidence(p_star: f64, delta: f64) -> Result<ConfidenceHorizon> {
    if !(p_star > 0.0 && p_star <= 1.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::DegenerateParameters(format!(
            "need 0 < p* <= 1 and 0 < delta < 1, got p* = {p_star}, delta = {delta}"
        )));
    }
    let bound = ((1.0 / delta).ln() / p_star).ceil().max(1.0) as usize;
    let miss = 1.0 - p_star;
    if miss == 0.0 {
        return Ok(ConfidenceHorizon { exact: 1, bound });
    }
    let survive = |t: usize| miss.powi(t as i32);
    let mut exact = (delta.ln() / miss.ln()).ceil().max(1.0) as usize;
    while survive(exact) > delta {
        exact += 1;
    }
    while exact > 1 && survive(exact - 1) <= delta {
        exact -= 1;
    }
    Ok(ConfidenceHorizon { exact, bound })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleStats {
    pub trials: usize,
    pub mean_steps: f64,
    /// `None` with a single trial.
    pub std_error: Option<f64>,
    /// `1 / p*` for the plan that was run.
    pub theoretical: f64,
}

/// Mean and standard error of the steps a threshold test takes under `plan`.
pub fn empirical_with_plan<B: BiasFunction, R: Rng + ?Sized>(
    plan: &TestPlan,
    instance: &Instance,
    agent: &BiasedAgent<B>,
    rng: &mut R,
    trials: usize,
) -> Result<SampleStats> {
    if trials == 0 {
        return Err(Error::DegenerateParameters("trials must be at least 1".into()));
    }
    let max_steps = plan.default_max_steps();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..trials {
        let steps = plan.run(instance, agent, rng, max_steps, false)?.steps as f64;
        sum += steps;
        sum_sq += steps * steps;
    }
    let n = trials as f64;
    let mean_steps = sum / n;
    let std_error = (trials > 1).then(|| {
        let var = ((sum_sq - n * mean_steps * mean_steps) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    });
    Ok(SampleStats {
        trials,
        mean_steps,
        std_error,
        theoretical: 1.0 / plan.useful_mass,
    })
}

pub fn empirical_sample_complexity<R: Rng + ?Sized>(
    instance: &Instance,
    tau: f64,
    agent: &BiasedAgent,
    rng: &mut R,
    trials: usize,
) -> Result<SampleStats> {
    let plan = LpDesigner.plan(instance, tau)?;
    empirical_with_plan(&plan, instance, agent, rng, trials)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasInterval {
    pub lo: f64,
    pub hi: f64,
    pub queries: usize,
    /// The agent kept the default action even at the largest testable
    /// threshold, so only `w ≥ lo` is known.
    pub censored: bool,
}

impl BiasInterval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, w: f64) -> bool {
        self.lo <= w && w <= self.hi
    }
}

/// Worst-case number of threshold tests [`estimate_bias`] performs.
pub fn query_budget(tau_max: f64, epsilon: f64) -> usize {
    (tau_max / epsilon).log2().ceil().max(0.0) as usize + 1
}

/// Binary search for the bias level over the testable range using the
/// optimal linear-model schemes.
pub fn estimate_bias<R: Rng + ?Sized>(
    instance: &Instance,
    agent: &BiasedAgent,
    epsilon: f64,
    rng: &mut R,
    max_steps_per_test: Option<usize>,
) -> Result<BiasInterval> {
    estimate_bias_with(
        &CachedDesigner::new(LpDesigner),
        instance,
        agent,
        epsilon,
        rng,
        max_steps_per_test,
    )
}

/// Binary search on `[0, τ_max]`. If every test answers `w ≥ τ`, one final
/// test at `τ_max` decides between `[lo, τ_max]` and the censored `[τ_max, 1]`.
pub fn estimate_bias_with<D: Designer + ?Sized, B: BiasFunction, R: Rng + ?Sized>(
    designer: &D,
    instance: &Instance,
    agent: &BiasedAgent<B>,
    epsilon: f64,
    rng: &mut R,
    max_steps_per_test: Option<usize>,
) -> Result<BiasInterval> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::DegenerateParameters(format!(
            "accuracy must lie in (0, 1), got {epsilon}"
        )));
    }
    let tau_max = designer.testable_max(instance)?;
    if tau_max <= 0.0 {
        return Err(Error::NothingTestable);
    }
    let mut queries = 0;
    let mut query = |tau: f64, rng: &mut R| -> Result<Direction> {
        let plan = designer.plan(instance, tau)?;
        let max_steps = max_steps_per_test.unwrap_or_else(|| plan.default_max_steps());
        queries += 1;
        Ok(plan.run(instance, agent, rng, max_steps, false)?.verdict)
    };

    let (mut lo, mut hi) = (0.0, tau_max);
    let mut upper_confirmed = false;
    while hi - lo > epsilon {
        let tau = 0.5 * (lo + hi);
        match query(tau, rng)? {
            Direction::GEq => lo = tau,
            Direction::LEq => {
                hi = tau;
                upper_confirmed = true;
            }
        }
    }
    let mut censored = false;
    if !upper_confirmed {
        match query(tau_max, rng)? {
            Direction::GEq => {
                lo = tau_max;
                hi = 1.0;
                censored = true;
            }
            Direction::LEq => {}
        }
    }
    Ok(BiasInterval {
        lo,
        hi,
        queries,
        censored,
    })
}
