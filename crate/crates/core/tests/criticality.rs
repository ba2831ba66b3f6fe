use std::sync::Arc;

use proptest::prelude::*;
use tdnls_core::criticality::{
    classify, classify_samples, default_theta, free_decay_branch, strong_dissipation, theta_upper,
    threshold_exponents, CriticalityClass, DecayLaw, Envelope, FreeDecayBranch, Nonlinearity, TOL_CLASS,
};
use tdnls_core::oscillator::{build_derived, geomspace, solve_fundamental, OscillatorDerived, OscillatorModel};

fn free_derived(p: f64) -> OscillatorDerived {
    let pair = Arc::new(solve_fundamental(&OscillatorModel::zero(1.0), 1e3, 1e-12).unwrap());
    build_derived(pair, 1, p, 1.0, 1e3).unwrap()
}

fn expected_class(alpha: f64) -> CriticalityClass {
    if (alpha - 1.0).abs() <= TOL_CLASS {
        CriticalityClass::Critical
    } else if alpha < 1.0 {
        CriticalityClass::SubCritical
    } else {
        CriticalityClass::SuperCritical
    }
}

#[test]
fn strong_dissipation_examples() {
    let nl = |re: f64, im: f64| Nonlinearity::new(3.0, re, im).unwrap();
    assert!(strong_dissipation(&nl(0.0, -1.0)));
    // (p−1)/(2√p) = 1/√3 at p = 3, so this sits on the boundary.
    assert!(strong_dissipation(&nl(1.0, -1.0 / 3f64.sqrt())));
    assert!(!strong_dissipation(&nl(2.0, -0.5)));
}

#[test]
fn nonlinearity_validation() {
    assert!(Nonlinearity::new(1.0, 0.0, -1.0).is_err());
    assert!(Nonlinearity::new(3.0, 0.0, 0.5).is_err());
    assert!(Nonlinearity::new(3.0, f64::NAN, -1.0).is_err());
    assert!(Nonlinearity::new(3.0, 0.0, 0.0).unwrap().is_linear());
    let nl: Nonlinearity = toml::from_str("p = 2.5\nlambda_im = -0.5\n").unwrap();
    assert_eq!(nl.lambda_re, 0.0);
}

#[test]
fn explicit_thresholds() {
    let t1 = threshold_exponents(1);
    assert!((t1.p_n - (1.0 + 2f64.sqrt())).abs() < 1e-12);
    assert_eq!(t1.p_star_star, 2.0);
    assert!((t1.p_star - (10.0 + 73f64.sqrt()) / 9.0).abs() < 1e-12);
    let t3 = threshold_exponents(3);
    assert!((t3.p_n - (3.0 + 24f64.sqrt()) / 5.0).abs() < 1e-12);
    assert!((t3.p_star - (24.0 + 201f64.sqrt()) / 25.0).abs() < 1e-12);
    assert!((t3.p_star_star - 1.4).abs() < 1e-12);
    for n in 1..=10 {
        let t = threshold_exponents(n);
        assert!(t.p_star_star < t.p_star && t.p_star < t.p_n, "n = {n}: {t:?}");
    }
}

#[test]
fn theta_window_for_n1_is_half() {
    for p in [1.5, 2.0, 3.0, 5.0] {
        assert!((theta_upper(1, p) - 0.5).abs() < 1e-15);
        assert!((default_theta(1, p) - 0.45).abs() < 1e-15);
    }
    assert!(default_theta(2, 1.5) < 1.0);
}

#[test]
fn free_branches() {
    assert_eq!(free_decay_branch(1, 2.5), Some(FreeDecayBranch::Upper));
    assert_eq!(free_decay_branch(1, 2.03), Some(FreeDecayBranch::Lower));
    assert_eq!(free_decay_branch(1, 2.0), None);
    assert_eq!(free_decay_branch(1, 3.0), None);
}

#[test]
fn free_model_classifies_against_one_plus_two_over_n() {
    let pair = solve_fundamental(&OscillatorModel::zero(1.0), 1e3, 1e-12).unwrap();
    for (p, class) in [
        (2.0, CriticalityClass::SubCritical),
        (3.0, CriticalityClass::Critical),
        (4.0, CriticalityClass::SuperCritical),
    ] {
        let r = classify(&pair, 1, p, 1.0, 1e3).unwrap();
        assert_eq!(r.class, class, "p = {p}");
        assert!((r.y2_exponent - 1.0).abs() < 1e-12);
        assert_eq!(r.p_critical, Some(3.0));
        assert!((r.delta - 1.0).abs() < 1e-12);
    }
}

#[test]
fn inverse_square_distances_match_the_power_law() {
    // y₂ ~ c t^(3/4), so α = 3k/4 and p_c = 1 + 8/(3n).
    let pair = solve_fundamental(&OscillatorModel::attractive(3.0 / 16.0, 1.0).unwrap(), 1e8, 1e-12).unwrap();
    let r = classify(&pair, 1, 3.0, 1.0, 1e8).unwrap();
    assert_eq!(r.class, CriticalityClass::SubCritical);
    assert!((r.delta_star.unwrap() - 0.25).abs() < 1e-3, "{:?}", r.delta_star);
    assert!((r.p_critical.unwrap() - 11.0 / 3.0).abs() < 1e-12);
    let r = classify(&pair, 1, 5.0, 1.0, 1e8).unwrap();
    assert_eq!(r.class, CriticalityClass::SuperCritical);
    assert!((r.delta_upper.unwrap() - 0.5).abs() < 1e-3);
}

#[test]
fn free_rates_follow_the_branches() {
    let nl = |p: f64| Nonlinearity::new(p, 0.0, -1.0).unwrap();
    let free_law = |p: f64| {
        let ts = geomspace(500.0, 1e3, 50);
        let d = free_derived(p);
        classify_samples(&ts, &ts, 1, p)
            .unwrap()
            .complete(1.0, &nl(p), &d)
            .predicted
            .into_iter()
            .find(|r| r.law == DecayLaw::FreeMassDecay)
            .unwrap()
    };
    let r = free_law(2.5);
    let ds = 1.0 - 0.75;
    assert!(r.applicable());
    assert_eq!(r.envelope, Envelope::PowerOfT { exponent: -2.0 * ds / (1.5 * 3.0) });
    let r = free_law(2.03);
    assert!(r.applicable());
    let ds = 1.0 - 0.515;
    match r.envelope {
        Envelope::PowerOfT { exponent } => assert!((exponent - (ds - 0.5 * 0.45)).abs() < 1e-12),
        other => panic!("{other:?}"),
    }
    assert!(!free_law(3.0).applicable());
}

#[test]
fn critical_mass_envelope_is_a_power_of_y2() {
    let ts = geomspace(500.0, 1e3, 50);
    let d = free_derived(3.0);
    let nl = Nonlinearity::new(3.0, 0.0, -1.0).unwrap();
    let r = classify_samples(&ts, &ts, 1, 3.0).unwrap().complete(1.0, &nl, &d);
    let mass = r.predicted.iter().find(|x| x.law == DecayLaw::SmallDataMass).unwrap();
    assert!(mass.applicable());
    assert_eq!(mass.envelope, Envelope::PowerOfY2 { exponent: -1.0 / (2.0 * 2.0) });
    let point = r.predicted.iter().find(|x| x.law == DecayLaw::SmallDataPointwise).unwrap();
    assert_eq!(point.envelope, Envelope::Pointwise { exponent: -0.5 });
    assert!(r.to_json().contains("\"class\": \"critical\""));
    assert!(r.table().contains("SmallDataMass"));
}

proptest! {
    #[test]
    fn power_law_samples_classify_by_sign(beta in 0.2f64..2.0, p in 1.2f64..6.0, n in 1usize..4, c in 0.1f64..10.0) {
        let ts = geomspace(50.0, 100.0, 50);
        let y2: Vec<f64> = ts.iter().map(|t| c * t.powf(beta)).collect();
        let r = classify_samples(&ts, &y2, n, p).unwrap();
        let alpha = 0.5 * n as f64 * (p - 1.0) * beta;
        prop_assert_eq!(r.class, expected_class(alpha));
        match r.class {
            CriticalityClass::SubCritical => prop_assert!((r.delta_star.unwrap() - (1.0 - alpha)).abs() < 1e-3),
            CriticalityClass::SuperCritical => prop_assert!((r.delta_upper.unwrap() - (alpha - 1.0)).abs() < 1e-3),
            _ => {}
        }
    }

    #[test]
    fn predictions_respect_their_hypotheses(
        n in 1usize..6,
        p in 1.2f64..5.0,
        s in 0.1f64..6.0,
        lambda_re in -5.0f64..5.0,
        lambda_im in -2.0f64..-0.01,
    ) {
        let ts = geomspace(500.0, 1e3, 50);
        let nl = Nonlinearity::new(p, lambda_re, lambda_im).unwrap();
        let d = free_derived(p);
        let r = classify_samples(&ts, &ts, n, p).unwrap().complete(s, &nl, &d);
        let small_ok = n <= 3 && s > 0.5 * n as f64 && s < p;
        for rate in &r.predicted {
            match rate.law {
                DecayLaw::SmallDataPointwise | DecayLaw::SmallDataMass | DecayLaw::SmallDataLowerBound => {
                    if !small_ok {
                        prop_assert!(!rate.applicable(), "{:?}", rate);
                    }
                }
                DecayLaw::LargeDataMass | DecayLaw::FreeMassDecay => {
                    if !strong_dissipation(&nl) {
                        prop_assert!(!rate.applicable(), "{:?}", rate);
                    }
                }
            }
        }
    }
}
