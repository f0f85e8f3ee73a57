use approx::assert_relative_eq;
use proptest::prelude::*;
use quest_core::link_budget::{
    atmospheric_loss_db, clipping_loss_db, db_to_transmission, diffraction_spot_diameter, fwhm_to_e2_diameter,
    optics_loss_db, optimal_tx_diameter, pointing_loss_db, to_e2_diameter, total_link_budget, transmission_to_db,
    turbulent_spot_diameter, modeled_components, BeamParams, LinkError, LossComponents, OpticsTrain, SpotConvention,
};
use quest_core::spacetime::{slant_range, EARTH_RADIUS_M};

const LAMBDA: f64 = 830e-9;

#[test]
fn db_round_trip() {
    assert_relative_eq!(db_to_transmission(10.0), 0.1, max_relative = 1e-15);
    assert_relative_eq!(transmission_to_db(0.5), 3.010_299_956_639_812, max_relative = 1e-15);
    for db in [0.0, 3.0, 46.0, 79.5] {
        assert_relative_eq!(transmission_to_db(db_to_transmission(db)), db, epsilon = 1e-12);
    }
}

#[test]
fn airmass() {
    assert_eq!(atmospheric_loss_db(0.0, 3.5).unwrap(), 3.5);
    let l = atmospheric_loss_db(37f64.to_radians(), 3.5).unwrap();
    assert!((l - 4.38).abs() < 0.01, "{l}");
    assert!(atmospheric_loss_db(75f64.to_radians(), 3.5).is_err());
    assert!(atmospheric_loss_db(0.1, -1.0).is_err());
}

#[test]
fn diffraction_scaling() {
    let base = diffraction_spot_diameter(0.13, 500e3, LAMBDA, SpotConvention::E2).unwrap();
    // 2λL/(π D/2)
    assert_relative_eq!(base, 4.0 * LAMBDA * 500e3 / (std::f64::consts::PI * 0.13), max_relative = 1e-14);
    let far = diffraction_spot_diameter(0.13, 1000e3, LAMBDA, SpotConvention::E2).unwrap();
    let wide = diffraction_spot_diameter(0.26, 500e3, LAMBDA, SpotConvention::E2).unwrap();
    assert_relative_eq!(far, 2.0 * base, max_relative = 1e-14);
    assert_relative_eq!(wide, 0.5 * base, max_relative = 1e-14);
    let fwhm = diffraction_spot_diameter(0.13, 500e3, LAMBDA, SpotConvention::Fwhm).unwrap();
    assert_relative_eq!(fwhm_to_e2_diameter(fwhm), base, max_relative = 1e-14);
    assert!(diffraction_spot_diameter(0.0, 500e3, LAMBDA, SpotConvention::E2).is_err());
}

#[test]
fn turbulent_spot() {
    let d = turbulent_spot_diameter(0.13, 0.15, 530e3, LAMBDA, SpotConvention::Fwhm).unwrap();
    assert!((2.5..=4.5).contains(&d), "{d}");
    // Weak turbulence leaves the diffraction spot.
    let calm = turbulent_spot_diameter(0.13, 1e6, 530e3, LAMBDA, SpotConvention::Fwhm).unwrap();
    let diff = diffraction_spot_diameter(0.13, 530e3, LAMBDA, SpotConvention::Fwhm).unwrap();
    assert_relative_eq!(calm, diff, max_relative = 1e-9);
    assert!(d > diff);
}

#[test]
fn optimum_aperture() {
    let opt = optimal_tx_diameter(0.15, 530e3, LAMBDA).unwrap();
    assert!((0.08..=0.20).contains(&opt.diameter_m), "{}", opt.diameter_m);
    for dd in [-0.02, 0.02] {
        let s = turbulent_spot_diameter(opt.diameter_m + dd, 0.15, 530e3, LAMBDA, SpotConvention::Fwhm).unwrap();
        assert!(s > opt.spot_fwhm_m);
    }
    let other_range = optimal_tx_diameter(0.15, 400e3, LAMBDA).unwrap();
    assert!((other_range.diameter_m - opt.diameter_m).abs() < 2e-3);
    let mut last = 0.0;
    for r0 in [0.1, 0.15, 0.2, 0.3, 0.5] {
        let d = optimal_tx_diameter(r0, 530e3, LAMBDA).unwrap().diameter_m;
        assert!(d >= last - 1e-3, "r0 {r0}: {d} < {last}");
        last = d;
    }
    assert!(matches!(optimal_tx_diameter(0.05, 530e3, LAMBDA), Err(LinkError::InvalidArgument(_))));
}

#[test]
fn clipping() {
    let e2 = fwhm_to_e2_diameter(4.5);
    assert_relative_eq!(e2, 4.5 / (2f64.ln() / 2.0).sqrt(), max_relative = 1e-15);
    assert_relative_eq!(to_e2_diameter(4.5, SpotConvention::OneOverE), 4.5 * 2f64.sqrt(), max_relative = 1e-15);
    let l = clipping_loss_db(e2, 0.235, 0.35).unwrap();
    assert!((26.0..=28.0).contains(&l), "{l}");
    // Read as an e² diameter the same 4.5 m clips less.
    assert!(clipping_loss_db(4.5, 0.235, 0.35).unwrap() < 26.0);
    let halved = clipping_loss_db(e2, 0.235 / 2.0, 0.35).unwrap();
    assert!((halved - l - 6.0).abs() < 0.1, "{}", halved - l);
    assert!(clipping_loss_db(0.01, 1.0, 0.0).unwrap() < 1e-9);
    let obsc = clipping_loss_db(0.01, 1.0, 0.35).unwrap();
    assert_relative_eq!(obsc, transmission_to_db(1.0 - 0.35 * 0.35), max_relative = 1e-9);
    assert!(clipping_loss_db(e2, 0.235, 0.6).is_err());
}

#[test]
fn pointing() {
    assert_eq!(pointing_loss_db(0.0, 500e3, 1.0).unwrap(), 0.0);
    // σ = w/√2 halves the coupled power.
    let w = 2.0;
    let jitter = w / 2f64.sqrt() / 500e3;
    assert_relative_eq!(pointing_loss_db(jitter, 500e3, w).unwrap(), 3.010_299_956_639_812, max_relative = 1e-12);
    // 6 dB at σ ≈ 1.22 w.
    let six = pointing_loss_db(1.224_7 * w / 500e3, 500e3, w).unwrap();
    assert!((six - 6.0).abs() <= 2.0);
    assert!(pointing_loss_db(-1e-6, 500e3, w).is_err());
}

#[test]
fn optics() {
    let worst = optics_loss_db(0.6, 0.7, 0.6, 0.7).unwrap();
    let best = optics_loss_db(0.6, 0.7, 0.75, 0.7).unwrap();
    assert!((worst - 7.5).abs() <= 0.1, "{worst}");
    assert!((worst - 7.53).abs() < 0.01);
    assert!((best - 6.57).abs() < 0.01, "{best}");
    assert_eq!(optics_loss_db(1.0, 1.0, 1.0, 1.0).unwrap(), 0.0);
    assert!(optics_loss_db(0.0, 1.0, 1.0, 1.0).is_err());
    assert!(optics_loss_db(1.1, 1.0, 1.0, 1.0).is_err());
}

#[test]
fn modeled_worst_case() {
    let beam = BeamParams {
        wavelength_m: LAMBDA,
        tx_diameter_m: 0.13,
        fried_r0_m: 0.15,
        pointing_jitter_rad: 10e-6,
        rx_clear_aperture_m: 0.235,
        obscuration_fraction: 0.35,
    };
    let optics = OpticsTrain { detector_efficiency: 0.6, tx_transmission: 0.7, window_transmission: 0.6, rx_transmission: 0.7 };
    let theta = 37f64.to_radians();
    let range = slant_range(400e3, theta, EARTH_RADIUS_M);
    let c = modeled_components(&beam, &optics, theta, 3.5, range, 4.5, SpotConvention::Fwhm).unwrap();
    assert!((26.0..=28.0).contains(&c.clipping_db));
    assert!((c.pointing_db - 6.0).abs() <= 2.0, "{}", c.pointing_db);
    let total = total_link_budget(c).unwrap().total_db;
    assert!((total - 46.0).abs() <= 0.5, "{total}");
}

#[test]
fn totals() {
    let worst = total_link_budget(LossComponents::WORST_CASE).unwrap();
    assert!((worst.total_db - 46.0).abs() <= 0.5);
    assert_relative_eq!(worst.transmission, db_to_transmission(46.0), max_relative = 1e-12);
    assert_relative_eq!(total_link_budget(LossComponents::BEST_CASE).unwrap().total_db, 42.0, epsilon = 1e-12);
    let zero = LossComponents { atmospheric_db: 0.0, clipping_db: 0.0, pointing_db: 0.0, optics_db: 0.0 };
    let t = total_link_budget(zero).unwrap();
    assert_eq!((t.total_db, t.transmission), (0.0, 1.0));
    let bad = LossComponents { clipping_db: 81.0, ..zero };
    assert!(total_link_budget(bad).is_err());
}

proptest! {
    #[test]
    fn losses_are_non_negative(
        d in 0.01f64..5.0, a in 0.01f64..2.0, obsc in 0.0f64..0.5,
        jitter in 0.0f64..1e-4, range in 1e5f64..2e6,
    ) {
        prop_assert!(clipping_loss_db(d, a, obsc).unwrap() >= 0.0);
        prop_assert!(pointing_loss_db(jitter, range, d / 2.0).unwrap() >= 0.0);
    }

    #[test]
    fn pointing_monotone_in_jitter(j in 0.0f64..1e-4, range in 1e5f64..2e6, w in 0.1f64..5.0) {
        prop_assert!(pointing_loss_db(j + 1e-7, range, w).unwrap() > pointing_loss_db(j, range, w).unwrap());
    }

    #[test]
    fn clipping_monotone_in_aperture(d in 0.1f64..5.0, f in 0.01f64..1.0) {
        let a = d * f;
        prop_assert!(clipping_loss_db(d, a * 1.1, 0.2).unwrap() < clipping_loss_db(d, a, 0.2).unwrap());
    }
}
