use approx::assert_relative_eq;
use proptest::prelude::*;
use quest_core::counting_stats::SensitivityScenario;
use quest_core::detector_aging::{
    calibrate_apd, dark_count_rate, fluence_at_time, max_background_over_mission, reference_model, reserve_margin,
    temperature_for_target, AgingError, ApdKind, MissionEnvironment, SECONDS_PER_YEAR, TWO_YEAR_FLUENCE,
};

#[test]
fn reference_rows_are_reproduced() {
    for kind in ApdKind::ALL {
        let m = reference_model(kind);
        for (t_ref, rate) in kind.reference_rows() {
            let t = temperature_for_target(&m, rate, TWO_YEAR_FLUENCE).unwrap();
            assert!((t - t_ref).abs() <= 1.0, "{}: {t} vs {t_ref}", kind.name());
        }
    }
}

#[test]
fn slopes_follow_a_decade_per_span() {
    // Each table spans 200 → 2000 /s.
    for kind in ApdKind::ALL {
        let rows = kind.reference_rows();
        let beta = reference_model(kind).beta;
        let two_point = 10f64.ln() / (rows[2].0 - rows[0].0);
        assert!((beta / two_point - 1.0).abs() < 0.02, "{}: {beta} vs {two_point}", kind.name());
    }
}

#[test]
fn reserve_margins() {
    let slik = reserve_margin(&reference_model(ApdKind::Slik), 3.0).unwrap();
    assert!((slik - 13.5).abs() <= 2.0, "{slik}");
    let sap = reserve_margin(&reference_model(ApdKind::Sap500), 3.0).unwrap();
    assert!((sap - 17.0).abs() <= 1.0, "{sap}");
    assert_eq!(reserve_margin(&reference_model(ApdKind::Slik), 1.0).unwrap(), 0.0);
    assert!(reserve_margin(&reference_model(ApdKind::Slik), 0.5).is_err());
}

#[test]
fn fluence_accrues_linearly() {
    let env = MissionEnvironment::default();
    assert_eq!(fluence_at_time(0.0, &env).unwrap(), 0.0);
    assert_relative_eq!(fluence_at_time(2.0 * SECONDS_PER_YEAR, &env).unwrap(), 5e8, max_relative = 1e-12);
    assert_relative_eq!(fluence_at_time(SECONDS_PER_YEAR, &env).unwrap(), 2.5e8, max_relative = 1e-12);
    assert!(matches!(fluence_at_time(-1.0, &env), Err(AgingError::InvalidArgument(_))));
}

#[test]
fn dark_rate_examples() {
    let m = reference_model(ApdKind::Slik);
    assert_relative_eq!(dark_count_rate(&m, -29.1, TWO_YEAR_FLUENCE).unwrap(), 2000.0, max_relative = 1e-12);
    assert_relative_eq!(dark_count_rate(&m, -29.1, 0.0).unwrap(), m.intrinsic_dark_rate, max_relative = 1e-12);
    // Affine in fluence at fixed temperature.
    let r = |f: f64| dark_count_rate(&m, -40.0, f).unwrap();
    assert_relative_eq!(r(2e8) - r(1e8), r(3e8) - r(2e8), max_relative = 1e-10);
    assert!(dark_count_rate(&m, 25.0, 0.0).is_err());
    assert!(dark_count_rate(&m, -40.0, -1.0).is_err());
}

#[test]
fn warmer_tolerant_parts_count_more() {
    for t in [-60.0, -50.0, -40.0] {
        let r = |k| dark_count_rate(&reference_model(k), t, TWO_YEAR_FLUENCE).unwrap();
        assert!(r(ApdKind::Slik) < r(ApdKind::C30921Sh) && r(ApdKind::C30921Sh) < r(ApdKind::Sap500), "{t}");
    }
}

#[test]
fn unreachable_targets() {
    let m = reference_model(ApdKind::Slik);
    assert!(matches!(temperature_for_target(&m, 50.0, TWO_YEAR_FLUENCE), Err(AgingError::Unreachable { .. })));
    assert!(matches!(temperature_for_target(&m, 1e12, TWO_YEAR_FLUENCE), Err(AgingError::Unreachable { .. })));
}

#[test]
fn calibration_guards() {
    assert!(calibrate_apd("x", &[(-50.0, 200.0)], 5e8, 10.0).is_err());
    assert!(calibrate_apd("x", &[(-50.0, 200.0), (-50.0, 400.0)], 5e8, 10.0).is_err());
    assert!(calibrate_apd("x", &[(-50.0, 400.0), (-40.0, 200.0)], 5e8, 10.0).is_err());
    assert!(calibrate_apd("x", &[(-50.0, 200.0), (-40.0, 400.0)], 0.0, 10.0).is_err());
    assert!(calibrate_apd("x", &[(-50.0, 200.0), (-40.0, 400.0)], 5e8, 500.0).is_err());
    assert_eq!(ApdKind::parse("slik"), Some(ApdKind::Slik));
    assert_eq!(ApdKind::parse("nope"), None);
}

#[test]
fn allowance_shrinks_with_mission_time() {
    let m = reference_model(ApdKind::Slik);
    let env = MissionEnvironment::default();
    let s = SensitivityScenario::reference_worst_case();
    let mut last = f64::INFINITY;
    for years in [0.0, 0.5, 1.0, 1.5, 2.0] {
        let a = max_background_over_mission(years * SECONDS_PER_YEAR, 1e9, -29.1, &m, &env, &s, 46.0, 0.04).unwrap();
        assert!(a.background_allowance <= last);
        assert!(a.background_allowance >= 0.0);
        last = a.background_allowance;
    }
}

#[test]
fn two_year_allowance_threshold() {
    let m = reference_model(ApdKind::Slik);
    let env = MissionEnvironment::default();
    let s = SensitivityScenario::reference_worst_case();
    let t = 2.0 * SECONDS_PER_YEAR;
    let allowance = |p: f64| {
        max_background_over_mission(t, p, -29.1, &m, &env, &s, 46.0, 0.04).unwrap().background_allowance
    };
    let ok = |p: f64| allowance(p) > 0.0;
    // Bisect the pair rate at which the allowance opens.
    let (mut lo, mut hi) = (1e7, 1e10);
    assert!(!ok(lo) && ok(hi));
    while hi / lo > 1.01 {
        let mid = (lo * hi).sqrt();
        if ok(mid) {
            hi = mid
        } else {
            lo = mid
        }
    }
    assert!((1.5e8..=6e8).contains(&hi), "{hi}");
}

proptest! {
    #[test]
    fn doubling_target_costs_ln2_over_beta(target in 150.0f64..5000.0, fluence in 1e8f64..1e9) {
        let m = reference_model(ApdKind::C30921Sh);
        let a = temperature_for_target(&m, target, fluence);
        let b = temperature_for_target(&m, 2.0 * target, fluence);
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert!((b - a - 2f64.ln() / m.beta).abs() < 1e-9);
        }
    }

    #[test]
    fn rate_increases_with_temperature_and_fluence(t in -99.0f64..19.0, f in 0.0f64..1e9) {
        let m = reference_model(ApdKind::Sap500);
        let r = dark_count_rate(&m, t, f).unwrap();
        prop_assert!(dark_count_rate(&m, t + 1.0, f).unwrap() > r);
        prop_assert!(dark_count_rate(&m, t, f + 1e7).unwrap() > r);
    }

    #[test]
    fn target_round_trip(target in 150.0f64..3000.0) {
        let m = reference_model(ApdKind::Slik);
        if let Ok(t) = temperature_for_target(&m, target, TWO_YEAR_FLUENCE) {
            let r = dark_count_rate(&m, t, TWO_YEAR_FLUENCE).unwrap();
            prop_assert!((r / target - 1.0).abs() < 1e-10);
        }
    }
}
