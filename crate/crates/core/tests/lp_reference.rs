//! Optimal values checked against reference solutions computed with an
//! independent solver (HiGHS), recorded in `tests/data/lp_reference.json`.

use approx::assert_abs_diff_eq;
use biaslab::{classify, design_scheme, verify_design, Instance, InstanceFile, Verdict, TOL};
use serde::Deserialize;

#[derive(Deserialize)]
struct Case {
    instance: InstanceFile,
    tau: f64,
    p_star: f64,
}

fn cases() -> Vec<(Instance, f64, f64)> {
    let raw: Vec<Case> = serde_json::from_str(include_str!("data/lp_reference.json")).unwrap();
    raw.into_iter()
        .map(|c| (c.instance.validate().unwrap(), c.tau, c.p_star))
        .collect()
}

#[test]
fn optimal_values_match_reference() {
    for (k, (inst, tau, expected)) in cases().into_iter().enumerate() {
        match design_scheme(&inst, tau) {
            Ok(d) => {
                assert!(
                    expected > TOL,
                    "case {k}: designed a scheme for an untestable threshold"
                );
                assert_abs_diff_eq!(d.useful_mass, expected, epsilon = 1e-7);
                verify_design(&inst, tau, &d).unwrap();
            }
            Err(e) => assert!(expected <= 1e-7, "case {k}: {e}, reference p* {expected}"),
        }
    }
}

#[test]
fn verdicts_match_reference() {
    for (inst, tau, expected) in cases() {
        let verdict = classify(&inst, tau).unwrap().verdict;
        let want = if expected <= TOL {
            Verdict::Untestable
        } else if expected >= 1.0 - TOL {
            Verdict::SingleSample
        } else {
            Verdict::Finite
        };
        assert_eq!(verdict, want, "tau {tau}, reference p* {expected}");
    }
}
