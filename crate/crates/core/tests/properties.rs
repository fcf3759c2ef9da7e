mod common;

use std::cmp::Ordering;

use biaslab::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64) -> Instance {
    common::random_instance(&mut ChaCha8Rng::seed_from_u64(seed))
}

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(96)
}

fn verdict_rank(v: Verdict) -> u8 {
    match v {
        Verdict::SingleSample => 0,
        Verdict::Finite => 1,
        Verdict::Untestable => 2,
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn posteriors_average_to_prior(seed in any::<u64>(), signals in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = common::random_instance(&mut rng);
        let scheme = SignalingScheme::new(
            common::labels("m", signals),
            common::random_cond(&mut rng, signals, inst.num_states()),
        ).unwrap();
        prop_assert!(splitting_check(&inst, &scheme).unwrap() <= 1e-9);

        let weights = scheme.signal_probs(inst.prior());
        let posteriors: Vec<Belief> = (0..signals)
            .map(|s| bayes_posterior(&inst, &scheme, s).unwrap_or_else(|_| inst.prior().clone()))
            .collect();
        let rebuilt = scheme_from_posteriors(&inst, &weights, &posteriors).unwrap();
        for s in 0..signals {
            if weights[s] > 1e-9 {
                let again = bayes_posterior(&inst, &rebuilt, s).unwrap();
                prop_assert!(again.distance(&posteriors[s]) <= 1e-9);
            }
        }
    }

    #[test]
    fn biased_belief_is_the_convex_combination(seed in any::<u64>(), w in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 2 + (seed % 4) as usize;
        let prior = common::random_belief(&mut rng, n);
        let post = common::random_belief(&mut rng, n);
        let nu = biased_belief(&prior, &post, w).unwrap();
        for i in 0..n {
            prop_assert!((nu[i] - (w * prior[i] + (1.0 - w) * post[i])).abs() <= 1e-12);
        }
        prop_assert_eq!(biased_belief(&prior, &post, 0.0).unwrap(), post.clone());
        prop_assert!(biased_belief(&prior, &post, 1.0).unwrap().distance(&prior) <= 1e-15);
    }

    #[test]
    fn best_response_ignores_state_dependent_shifts(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = common::random_instance(&mut rng);
        let shift: Vec<f64> = (0..inst.num_states()).map(|_| rand::Rng::random_range(&mut rng, -3.0..3.0)).collect();
        let mut file = inst.to_file();
        for row in &mut file.utility {
            for (u, c) in row.iter_mut().zip(&shift) {
                *u += c;
            }
        }
        let shifted = file.validate().unwrap();
        prop_assert_eq!(shifted.default_action(), inst.default_action());
        for _ in 0..20 {
            let belief = common::random_belief(&mut rng, inst.num_states());
            let mut eus: Vec<f64> = (0..inst.num_actions()).map(|a| inst.expected_utility(a, &belief)).collect();
            eus.sort_by(|a, b| b.total_cmp(a));
            if eus[0] - eus[1] > 1e-9 {
                prop_assert_eq!(
                    best_response(&inst, &belief, TieBreak::PreferDefault).action,
                    best_response(&shifted, &belief, TieBreak::PreferDefault).action
                );
            }
        }
    }

    #[test]
    fn two_state_optimum_has_closed_form(mu0 in 0.05f64..0.9, gap in 0.02f64..0.5, tau in 0.01f64..0.99) {
        let mu_star = (mu0 + gap).min(0.98);
        let inst = common::two_state_family(mu0, mu_star);
        // Posterior on Good at which the biased agent sits exactly on the threshold.
        let x = (mu_star - tau * mu0) / (1.0 - tau);
        match design_scheme(&inst, tau) {
            Ok(d) => {
                prop_assert!(x <= 1.0 + 1e-9);
                prop_assert!((d.useful_mass - mu0 / x).abs() <= 1e-9);
                let useful = d.scheme.signal_index("Active").unwrap();
                let post = bayes_posterior(&inst, &d.scheme, useful).unwrap();
                prop_assert!((post[0] - x).abs() <= 1e-9);
            }
            Err(Error::Untestable { .. }) => prop_assert!(x > 1.0 - 1e-9),
            Err(e) => prop_assert!(false, "{}", e),
        }
    }

    #[test]
    fn rescaling_utilities_keeps_optimum(seed in any::<u64>(), factor in 0.01f64..100.0, tau in 0.05f64..0.95) {
        let inst = instance(seed);
        let a = classify(&inst, tau).unwrap();
        let b = classify(&inst.scaled(factor).unwrap(), tau).unwrap();
        prop_assert_eq!(a.verdict, b.verdict);
        if let (Some(p), Some(q)) = (a.useful_mass, b.useful_mass) {
            prop_assert!((p - q).abs() <= 1e-9, "{} vs {}", p, q);
        }
    }

    #[test]
    fn untestable_thresholds_form_a_suffix(seed in any::<u64>()) {
        let inst = instance(seed);
        let mut seen_untestable = false;
        for i in 1..100 {
            let verdict = classify(&inst, i as f64 / 100.0).unwrap().verdict;
            if seen_untestable {
                prop_assert_eq!(verdict, Verdict::Untestable);
            }
            seen_untestable = verdict == Verdict::Untestable;
        }
    }

    #[test]
    fn two_state_optimum_shrinks_as_threshold_grows(mu0 in 0.05f64..0.9, gap in 0.02f64..0.5) {
        let inst = common::two_state_family(mu0, (mu0 + gap).min(0.98));
        let mut last_mass = f64::INFINITY;
        let mut last_rank = 0;
        for i in 1..50 {
            let c = classify(&inst, i as f64 / 50.0).unwrap();
            let mass = c.useful_mass.unwrap_or(0.0);
            prop_assert!(mass <= last_mass + 1e-9);
            prop_assert!(verdict_rank(c.verdict) >= last_rank);
            last_mass = mass;
            last_rank = verdict_rank(c.verdict);
        }
    }

    #[test]
    fn classification_matches_design_and_range(seed in any::<u64>(), tau in 0.01f64..0.99) {
        let inst = instance(seed);
        let c = classify(&inst, tau).unwrap();
        match design_scheme(&inst, tau) {
            Ok(d) => {
                prop_assert!(c.verdict != Verdict::Untestable);
                prop_assert!((c.useful_mass.unwrap() - d.useful_mass).abs() <= 1e-12);
                if c.verdict == Verdict::SingleSample {
                    let a0 = inst.default_action();
                    let s0 = d.scheme.signal_index(&inst.actions()[a0]).unwrap();
                    prop_assert!(d.scheme.signal_prob(inst.prior(), s0) <= 1e-9);
                }
            }
            Err(Error::Untestable { .. }) => prop_assert_eq!(c.verdict, Verdict::Untestable),
            Err(e) => prop_assert!(false, "{}", e),
        }
        if (tau - c.tau_max).abs() > 1e-6 {
            prop_assert_eq!(c.verdict == Verdict::Untestable, tau > c.tau_max);
        }
    }

    #[test]
    fn designed_signals_reveal_the_side_of_the_threshold(seed in any::<u64>(), tau in 0.05f64..0.95) {
        let inst = instance(seed);
        let Ok(d) = design_scheme(&inst, tau) else { return Ok(()); };
        let a0 = inst.default_action();
        for i in 0..=20 {
            let w = i as f64 / 20.0;
            let agent = BiasedAgent::linear(w, TieBreak::PreferDefault).unwrap();
            for s in 0..d.scheme.num_signals() {
                if d.scheme.signal_prob(inst.prior(), s) <= 1e-9 {
                    continue;
                }
                let action = agent.act(&inst, &d.scheme, s).unwrap();
                if s == a0 {
                    // Only pinned at w = τ; linearity in w and the strict
                    // preference at w = 1 carry it to [τ, 1] but not below.
                    if w >= tau {
                        prop_assert_eq!(action, a0, "w {} on the default signal", w);
                    }
                } else if w > tau + 1e-6 {
                    prop_assert_eq!(action, a0, "w {} signal {}", w, s);
                } else if w < tau - 1e-6 {
                    prop_assert!(action != a0, "w {} signal {}", w, s);
                }
            }
        }
    }

    #[test]
    fn preference_sign_agrees_with_expected_utility(seed in any::<u64>(), w in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = common::random_instance(&mut rng);
        let scheme = SignalingScheme::new(
            common::labels("m", 3),
            common::random_cond(&mut rng, 3, inst.num_states()),
        ).unwrap();
        let agent = BiasedAgent::linear(w, TieBreak::PreferDefault).unwrap();
        for s in 0..3 {
            if scheme.signal_prob(inst.prior(), s) <= 1e-6 {
                continue;
            }
            let nu = agent.belief(&inst, &scheme, s).unwrap();
            for a1 in 0..inst.num_actions() {
                for a2 in 0..inst.num_actions() {
                    let diff = inst.expected_utility(a1, &nu) - inst.expected_utility(a2, &nu);
                    let sign = preference_sign(&inst, &scheme, s, a1, a2, w).unwrap();
                    if diff > 1e-6 {
                        prop_assert_eq!(sign, Ordering::Greater);
                    } else if diff < -1e-6 {
                        prop_assert_eq!(sign, Ordering::Less);
                    }
                }
            }
        }
    }

    #[test]
    fn extreme_bias_levels(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = common::random_instance(&mut rng);
        let scheme = SignalingScheme::fully_informative(&inst);
        let bayesian = BiasedAgent::linear(0.0, TieBreak::PreferDefault).unwrap();
        let stubborn = BiasedAgent::linear(1.0, TieBreak::PreferNonDefault).unwrap();
        for s in 0..scheme.num_signals() {
            let post = bayes_posterior(&inst, &scheme, s).unwrap();
            prop_assert!(bayesian.belief(&inst, &scheme, s).unwrap().distance(&post) <= 1e-15);
            prop_assert!(stubborn.belief(&inst, &scheme, s).unwrap().distance(inst.prior()) <= 1e-15);
            prop_assert_eq!(stubborn.act(&inst, &scheme, s).unwrap(), inst.default_action());
        }
    }

    #[test]
    fn estimated_interval_contains_the_bias(seed in any::<u64>(), w in 0.0f64..=1.0, eps_idx in 0usize..3) {
        let inst = instance(seed);
        let tau_max = testable_range(&inst);
        prop_assume!(tau_max > 0.05);
        let epsilon = [0.2, 0.1, 0.05][eps_idx];
        let agent = BiasedAgent::linear(w, TieBreak::PreferDefault).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let interval = estimate_bias(&inst, &agent, epsilon, &mut rng, None).unwrap();
        prop_assert!(interval.contains(w), "{:?} misses {}", interval, w);
        prop_assert!(interval.queries <= query_budget(tau_max, epsilon));
        if interval.censored {
            prop_assert_eq!(interval.hi, 1.0);
        } else {
            prop_assert!(interval.width() <= epsilon + 1e-12);
        }
    }

    #[test]
    fn confidence_horizon_is_bracketed(p in 1e-3f64..=1.0, delta in 1e-12f64..0.5) {
        let h = steps_for_confidence(p, delta).unwrap();
        prop_assert!(h.exact <= h.bound);
        prop_assert!((1.0 - p).powi(h.exact as i32) <= delta);
        if h.exact > 1 {
            prop_assert!((1.0 - p).powi(h.exact as i32 - 1) > delta);
        }
    }

    #[test]
    fn warped_crossing_is_a_reparametrization(seed in any::<u64>(), gamma in 0.3f64..4.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = common::random_instance(&mut rng);
        let warped = WarpedLinear::new(gamma).unwrap();
        for _ in 0..5 {
            let post = common::random_belief(&mut rng, inst.num_states());
            let linear = crossing_level(&LinearBias, &inst, &post).unwrap();
            let bent = crossing_level(&warped, &inst, &post).unwrap();
            match (linear, bent) {
                (Some(l), Some(b)) => prop_assert!((l.powf(1.0 / gamma) - b).abs() <= 1e-8),
                (None, None) => {}
                other => prop_assert!(false, "{:?}", other),
            }
        }
    }

    #[test]
    fn vertex_range_equals_geometric_range(seed in any::<u64>()) {
        let inst = instance(seed);
        let vertex = FiniteDesigner { bias: LinearBias }.testable_max(&inst).unwrap();
        prop_assert!((vertex - testable_range(&inst)).abs() <= 1e-9);
    }
}
