//! Optimal direct signaling schemes for a threshold test.
//!
//! Variables are the conditionals `π(a|θ)` of a scheme whose signals are
//! action recommendations. The program maximizes the probability of
//! recommending anything other than the default action, subject to every
//! recommendation being optimal for an agent at bias level τ and every
//! non-default recommendation leaving that agent exactly indifferent with
//! the default action.

use serde::{Serialize, Serializer};

use crate::belief::biased_belief;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lp::{LinearProgram, Relation};
use crate::scheme::{bayes_posterior, SignalingScheme};
use crate::TOL;

/// Residual above which a designed scheme fails verification.
pub const VERIFY_TOL: f64 = 1e-8;

pub(crate) fn check_threshold(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRangeThreshold(tau))
    }
}

/// Index of the variable `π(action | state)`.
pub fn var_index(instance: &Instance, action: usize, state: usize) -> usize {
    action * instance.num_states() + state
}

/// Coefficient of `π(a|θ)` in the row comparing `a1` with `a2` at bias `w`:
/// `μ0(θ) [(1-w) ΔU(a1,a2,θ) + w Σ_θ' μ0(θ') ΔU(a1,a2,θ')]`.
pub(crate) fn preference_coeffs(instance: &Instance, a1: usize, a2: usize, w: f64) -> Vec<f64> {
    let prior = instance.prior().probs();
    let u = instance.utility();
    let gap: Vec<f64> = u[a1].iter().zip(&u[a2]).map(|(x, y)| x - y).collect();
    let at_prior: f64 = prior.iter().zip(&gap).map(|(p, g)| p * g).sum();
    prior
        .iter()
        .zip(&gap)
        .map(|(p, g)| p * ((1.0 - w) * g + w * at_prior))
        .collect()
}

pub fn build_lp(instance: &Instance, tau: f64) -> Result<LinearProgram> {
    check_threshold(tau)?;
    let na = instance.num_actions();
    let ns = instance.num_states();
    let a0 = instance.default_action();
    let prior = instance.prior().probs();
    let mut lp = LinearProgram::new(na * ns);

    for a in (0..na).filter(|&a| a != a0) {
        for (s, p) in prior.iter().enumerate() {
            lp.objective[var_index(instance, a, s)] = *p;
        }
    }

    let row_for = |a: usize, other: usize| {
        let mut row = vec![0.0; na * ns];
        for (s, c) in preference_coeffs(instance, a, other, tau).into_iter().enumerate() {
            row[var_index(instance, a, s)] = c;
        }
        row
    };

    let names = instance.actions();
    for a in 0..na {
        for other in (0..na).filter(|&o| o != a) {
            lp.add(
                row_for(a, other),
                Relation::Ge,
                0.0,
                format!("optimality {} over {}", names[a], names[other]),
            );
        }
    }
    for a in (0..na).filter(|&a| a != a0) {
        lp.add(
            row_for(a, a0),
            Relation::Eq,
            0.0,
            format!("indifference {} vs {}", names[a], names[a0]),
        );
    }
    for s in 0..ns {
        let mut row = vec![0.0; na * ns];
        for a in 0..na {
            row[var_index(instance, a, s)] = 1.0;
        }
        lp.add(row, Relation::Eq, 1.0, format!("distribution {}", instance.states()[s]));
    }
    Ok(lp)
}

/// Optimal direct scheme for testing `w ≥ τ` against `w ≤ τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignResult {
    pub tau: f64,
    /// Signals are the instance's actions, in order.
    pub scheme: SignalingScheme,
    /// Probability that a non-default action is recommended.
    pub useful_mass: f64,
    /// Expected number of rounds until a useful signal; infinite when none can arrive.
    pub sample_complexity: f64,
    /// Optimal value reported by the solver.
    pub lp_value: f64,
}

pub(crate) fn serialize_complexity<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str("inf")
    }
}

#[derive(Serialize)]
struct DesignJson<'a> {
    tau: f64,
    p_star: f64,
    #[serde(serialize_with = "serialize_complexity")]
    sample_complexity: f64,
    scheme: &'a SignalingScheme,
}

impl Serialize for DesignResult {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DesignJson {
            tau: self.tau,
            p_star: self.useful_mass,
            sample_complexity: self.sample_complexity,
            scheme: &self.scheme,
        }
        .serialize(s)
    }
}

/// Solves the design program without deciding testability.
pub(crate) fn solve_design(instance: &Instance, tau: f64) -> Result<DesignResult> {
    let lp = build_lp(instance, tau)?;
    let sol = lp.solve()?;
    let na = instance.num_actions();
    let ns = instance.num_states();
    let a0 = instance.default_action();
    let prior = instance.prior();

    let mut cond: Vec<Vec<f64>> = (0..na)
        .map(|a| (0..ns).map(|s| sol.x[var_index(instance, a, s)]).collect())
        .collect();
    // Recommendations that are essentially never sent carry no information;
    // folding them into the default keeps every posterior well conditioned.
    // The folded mass sits on the boundary, so optimality of a0 is preserved.
    for a in (0..na).filter(|&a| a != a0) {
        if prior.dot(&cond[a]) <= TOL {
            let moved = std::mem::replace(&mut cond[a], vec![0.0; ns]);
            for (dst, m) in cond[a0].iter_mut().zip(moved) {
                *dst += m;
            }
        }
    }
    for s in 0..ns {
        let total: f64 = cond.iter().map(|row| row[s]).sum();
        for row in cond.iter_mut() {
            row[s] /= total;
        }
    }
    let scheme = SignalingScheme::new(instance.actions().to_vec(), cond)?;
    let useful_mass: f64 = (0..na).filter(|&a| a != a0).map(|a| scheme.signal_prob(prior, a)).sum();
    let sample_complexity = if useful_mass > 0.0 {
        1.0 / useful_mass
    } else {
        f64::INFINITY
    };
    Ok(DesignResult {
        tau,
        scheme,
        useful_mass,
        sample_complexity,
        lp_value: sol.value,
    })
}

/// Designs the optimal constant scheme for threshold `tau`.
///
/// Fails with [`Error::Untestable`] when no scheme can ever send a useful
/// signal (optimal useful mass within tolerance of zero).
pub fn design_scheme(instance: &Instance, tau: f64) -> Result<DesignResult> {
    let result = solve_design(instance, tau)?;
    if result.useful_mass <= TOL {
        return Err(Error::Untestable { tau });
    }
    Ok(result)
}

/// Largest residual per constraint family of a designed scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerificationReport {
    pub optimality: f64,
    pub indifference: f64,
    pub distribution: f64,
    /// `|EU(a) - EU(a0)|` for a simulated agent at bias τ on each sent signal `a ≠ a0`.
    pub simulated_indifference: f64,
}

impl VerificationReport {
    pub fn max(&self) -> f64 {
        self.optimality
            .max(self.indifference)
            .max(self.distribution)
            .max(self.simulated_indifference)
    }
}

/// Re-evaluates every design constraint on `result.scheme` from scratch and
/// cross-checks indifference by simulating an agent at bias level τ.
pub fn verify_design(instance: &Instance, tau: f64, result: &DesignResult) -> Result<VerificationReport> {
    check_threshold(tau)?;
    let scheme = &result.scheme;
    if scheme.signals() != instance.actions() {
        return Err(Error::InvalidScheme("design schemes must recommend actions".into()));
    }
    let na = instance.num_actions();
    let ns = instance.num_states();
    let a0 = instance.default_action();
    let prior = instance.prior().probs();
    let u = instance.utility();
    let names = instance.actions();

    // Σ_θ π(a|θ) μ0(θ) [(1-τ)(U(a1,θ)-U(a2,θ)) + τ Σ_θ' μ0(θ')(U(a1,θ')-U(a2,θ'))]
    let row_value = |signal: usize, a1: usize, a2: usize| -> f64 {
        let mean_gap: f64 = (0..ns).map(|t| prior[t] * (u[a1][t] - u[a2][t])).sum();
        (0..ns)
            .map(|t| scheme.prob(signal, t) * prior[t] * ((1.0 - tau) * (u[a1][t] - u[a2][t]) + tau * mean_gap))
            .sum()
    };

    let mut violations = Vec::new();
    let mut report = VerificationReport {
        optimality: 0.0,
        indifference: 0.0,
        distribution: 0.0,
        simulated_indifference: 0.0,
    };

    for a in 0..na {
        for other in (0..na).filter(|&o| o != a) {
            let r = (-row_value(a, a, other)).max(0.0);
            report.optimality = report.optimality.max(r);
            if r > VERIFY_TOL {
                violations.push(format!(
                    "optimality {} over {} (residual {r:e})",
                    names[a], names[other]
                ));
            }
        }
    }
    for a in (0..na).filter(|&a| a != a0) {
        let r = row_value(a, a, a0).abs();
        report.indifference = report.indifference.max(r);
        if r > VERIFY_TOL {
            violations.push(format!("indifference {} vs {} (residual {r:e})", names[a], names[a0]));
        }
    }
    for s in 0..ns {
        let total: f64 = (0..na).map(|a| scheme.prob(a, s)).sum();
        let negative = (0..na).map(|a| (-scheme.prob(a, s)).max(0.0)).fold(0.0, f64::max);
        let r = (total - 1.0).abs().max(negative);
        report.distribution = report.distribution.max(r);
        if r > VERIFY_TOL {
            violations.push(format!("distribution {} (residual {r:e})", instance.states()[s]));
        }
    }
    for a in (0..na).filter(|&a| a != a0) {
        if scheme.signal_prob(instance.prior(), a) <= TOL {
            continue;
        }
        let posterior = bayes_posterior(instance, scheme, a)?;
        let belief = biased_belief(instance.prior(), &posterior, tau)?;
        let r = (instance.expected_utility(a, &belief) - instance.expected_utility(a0, &belief)).abs();
        report.simulated_indifference = report.simulated_indifference.max(r);
        if r > VERIFY_TOL {
            violations.push(format!("simulated indifference on signal {} (gap {r:e})", names[a]));
        }
    }

    if violations.is_empty() {
        Ok(report)
    } else {
        Err(Error::VerificationFailed { violations })
    }
}
