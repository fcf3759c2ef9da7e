//! Design of information-revealing signaling schemes that detect how far an
//! agent's belief updates fall short of Bayes' rule.
//!
//! An agent with bias level `w` acts on `w·prior + (1-w)·posterior`. The
//! principal commits to a signaling scheme, watches the agent's action, and
//! learns whether `w` lies above or below a threshold τ. This crate computes
//! optimal schemes for that test, classifies when the test is possible at
//! all, simulates biased agents, and estimates `w` by binary search.

pub mod agent;
pub mod belief;
pub mod bias;
pub mod design;
pub mod detector;
pub mod error;
pub mod geometry;
pub mod instance;
pub mod lp;
pub mod scheme;

/// Absolute tolerance shared by simplex membership, constraint checks and tie detection.
pub const TOL: f64 = 1e-9;

pub use agent::{preference_sign, BiasedAgent, Episode};
pub use belief::{biased_belief, Belief};
pub use bias::{
    check_assumptions, construct_finite_scheme, crossing_level, generalized_membership, AssumptionReport, BiasFunction,
    BiasModel, FiniteScheme, LinearBias, WarpedLinear,
};
pub use design::{build_lp, design_scheme, verify_design, DesignResult, VerificationReport};
pub use detector::{
    empirical_sample_complexity, empirical_with_plan, estimate_bias, estimate_bias_with, query_budget,
    steps_for_confidence, threshold_test, BiasInterval, CachedDesigner, ConfidenceHorizon, Designer, Direction,
    FiniteDesigner, LpDesigner, SampleStats, TestPlan, ThresholdVerdict, DEFAULT_DELTA,
};
pub use error::{Error, Result};
pub use geometry::{
    classify, default_margin, gap_vector, gap_vectors, indifference_offset, testable_range, translated_set_nonempty,
    Classification, GapVector, Verdict,
};
pub use instance::{best_response, BestResponse, Instance, InstanceFile, TieBreak};
pub use lp::{solve_lp, LinearProgram, LpError, LpSolution, Relation};
pub use scheme::{bayes_posterior, scheme_from_posteriors, splitting_check, SchemeFile, SignalingScheme};
