use nalgebra::DMatrix;
use proptest::prelude::*;
use quest_core::event_channel::{
    self, apply_displacement, apply_event_beamsplitter, coherent_state, coincidence_expectation,
    duplicate_state, event_gamma, event_gamma_continuous, singles_expectation, spdc_state, spdc_state_first_order,
    ChannelParams, InputKind, SpdcParams,
};
use quest_core::fock::{DensityState, FockError, FockSpace, TruncatedFockState};
use quest_core::Complex64;
use rand::{Rng, SeedableRng};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn random_state(labels: &[&str], cutoff: usize, seed: u64) -> TruncatedFockState {
    random_state_where(labels, cutoff, seed, |_| true)
}

/// Random normalised state supported on occupations accepted by `keep`.
fn random_state_where(labels: &[&str], cutoff: usize, seed: u64, keep: impl Fn(&[usize]) -> bool) -> TruncatedFockState {
    let space = FockSpace::new(labels, cutoff).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut amps: Vec<Complex64> = (0..space.dimension())
        .map(|i| {
            let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            if keep(&space.occupations(i)) { z } else { c(0.0) }
        })
        .collect();
    let n = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= n);
    TruncatedFockState::from_amplitudes(space, amps).unwrap()
}

fn max_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[test]
fn spdc_state_examples() {
    let vac = spdc_state(&SpdcParams::real(0.0).unwrap(), 4).unwrap();
    assert!((vac.norm_sqr() - 1.0).abs() < 1e-15);
    assert!((vac.amplitude(&[0, 0]).unwrap() - c(1.0)).norm() < 1e-15);

    let s = spdc_state(&SpdcParams::real(0.1).unwrap(), 6).unwrap();
    let ratio = s.amplitude(&[1, 1]).unwrap() / s.amplitude(&[0, 0]).unwrap();
    assert!((ratio - c(0.1)).norm() < 1e-15);
    assert!(s.amplitude(&[1, 0]).unwrap().norm() == 0.0);
}

#[test]
fn weak_pumping_guard() {
    assert!(SpdcParams::real(0.31).is_err());
    assert!(SpdcParams::with_guard(c(0.5), 0.6).is_ok());
    assert!(ChannelParams::new(1.2, 1.0, 1.0).is_err());
    assert!(ChannelParams::new(0.5, -0.1, 1.0).is_err());
}

#[test]
fn duplicate_expands_product() {
    let chi = 0.1;
    let s = spdc_state_first_order(&SpdcParams::real(chi).unwrap(), 2).unwrap();
    let d = duplicate_state(&s).unwrap();
    assert_eq!(d.labels(), ["1", "2", "3", "4"]);
    let vac = d.amplitude(&[0, 0, 0, 0]).unwrap();
    let rel = |occ: [usize; 4]| d.amplitude(&occ).unwrap() / vac;
    assert!((rel([1, 1, 0, 0]) - c(chi)).norm() < 1e-14);
    assert!((rel([0, 0, 1, 1]) - c(chi)).norm() < 1e-14);
    assert!((rel([1, 1, 1, 1]) - c(chi * chi)).norm() < 1e-14);
    assert!((d.norm_sqr() - s.norm_sqr().powi(2)).abs() < 1e-14);
}

#[test]
fn gamma_examples() {
    assert_eq!(event_gamma(0.3, c(0.0)).unwrap(), c(0.0));
    assert!(event_gamma(0.0, c(0.7)).unwrap().norm() < 1e-15);
    let g = event_gamma(0.5, c(1.0)).unwrap();
    assert!((g.re + 0.585_786_437_626_905).abs() < 1e-12);
    assert!(matches!(event_gamma(1.0, c(1.0)), Err(FockError::SingularParameter(_))));
    // The continuous extension agrees with the limit from below.
    let near = event_gamma(1.0 - 1e-12, c(0.4)).unwrap();
    let at = event_gamma_continuous(1.0, c(0.4)).unwrap();
    assert!((near - at).norm() < 1e-5);
}

#[test]
fn displacement_of_vacuum_is_coherent() {
    let gamma = Complex64::new(0.3, -0.2);
    let vac = TruncatedFockState::vacuum(&["a"], 8).unwrap();
    let out = apply_displacement(&vac, "a", gamma).unwrap();
    let mut expected = Complex64::new((-gamma.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..=8 {
        if n > 0 {
            expected = expected * gamma / (n as f64).sqrt();
        }
        assert!((out.amplitude(&[n]).unwrap() - expected).norm() < 1e-12, "level {n}");
    }
}

#[test]
fn displacement_examples() {
    let vac = TruncatedFockState::vacuum(&["a"], 4).unwrap();
    assert_eq!(apply_displacement(&vac, "a", c(0.0)).unwrap(), vac);
    let d = apply_displacement(&vac, "a", c(0.3)).unwrap();
    assert!((d.mean_photon_number("a").unwrap() - 0.09).abs() < 1e-6);

    let psi = random_state_where(&["a", "b"], 10, 3, |o| o[0] <= 2);
    let g = Complex64::new(0.4, 0.1);
    let back = apply_displacement(&apply_displacement(&psi, "a", g).unwrap(), "a", -g).unwrap();
    assert!(psi.fidelity(&back).unwrap() >= 1.0 - 1e-8);
}

#[test]
fn displacement_guard() {
    let vac = TruncatedFockState::vacuum(&["a"], 4).unwrap();
    let err = apply_displacement(&vac, "a", c(1.0)).unwrap_err();
    assert!(matches!(err, FockError::TruncationRisk { cutoff: 4, .. }));
}

#[test]
fn beamsplitter_limits() {
    let psi = random_state(&["1", "3"], 3, 11);
    let same = apply_event_beamsplitter(&psi, "1", "3", 1.0).unwrap();
    for (a, b) in psi.amplitudes().iter().zip(same.amplitudes()) {
        assert!((a - b).norm() < 1e-10);
    }
    let space = FockSpace::new(&["1", "3"], 2).unwrap();
    let mut amps = vec![c(0.0); space.dimension()];
    amps[space.index_of(&[1, 0]).unwrap()] = c(1.0);
    let one = TruncatedFockState::from_amplitudes(space, amps).unwrap();
    let swapped = apply_event_beamsplitter(&one, "1", "3", 0.0).unwrap();
    assert!((swapped.amplitude(&[0, 1]).unwrap() - c(-1.0)).norm() < 1e-12);
}

#[test]
fn finite_channel_matches_hand_expansion() {
    // |00⟩ + χ|11⟩ copied, beamsplitter on (1, 3), trace over 3 and 4.
    let chi = 0.2;
    let xi: f64 = 0.35;
    let s = spdc_state_first_order(&SpdcParams::real(chi).unwrap(), 2).unwrap();
    let psi = apply_event_beamsplitter(&duplicate_state(&s).unwrap(), "1", "3", xi).unwrap();

    let n2 = (1.0 + chi * chi).powi(2);
    let vac = psi.amplitude(&[0, 0, 0, 0]).unwrap();
    let amp = |o: [usize; 4]| psi.amplitude(&o).unwrap() / vac;
    assert!((amp([1, 1, 0, 0]) - c(chi * xi.sqrt())).norm() < 1e-14);
    assert!((amp([0, 1, 1, 0]) - c(-chi * (1.0 - xi).sqrt())).norm() < 1e-14);
    assert!((amp([0, 0, 1, 1]) - c(chi * xi.sqrt())).norm() < 1e-14);
    assert!((amp([1, 0, 0, 1]) - c(chi * (1.0 - xi).sqrt())).norm() < 1e-14);

    let space = FockSpace::new(&["1", "2"], 2).unwrap();
    let ket = |terms: &[([usize; 2], f64)]| {
        let mut v = nalgebra::DVector::<Complex64>::zeros(space.dimension());
        for (o, a) in terms {
            v[space.index_of(o).unwrap()] += c(*a);
        }
        v
    };
    let r = (2.0 * xi * (1.0 - xi)).sqrt();
    let sectors = [
        ket(&[([0, 0], 1.0), ([1, 1], chi * xi.sqrt())]),
        ket(&[([0, 1], -chi * (1.0 - xi).sqrt())]),
        ket(&[([1, 0], chi * (1.0 - xi).sqrt()), ([2, 1], chi * chi * r)]),
        ket(&[([0, 0], chi * xi.sqrt()), ([1, 1], chi * chi * (2.0 * xi - 1.0))]),
        ket(&[([0, 1], -chi * chi * r)]),
    ];
    let mut expected = DMatrix::<Complex64>::zeros(space.dimension(), space.dimension());
    for v in &sectors {
        expected += v * v.adjoint() / c(n2);
    }
    let rho = psi.reduce(&["1", "2"]).unwrap();
    assert!(max_diff(rho.matrix(), &expected) < 1e-14);
}

#[test]
fn loss_examples() {
    let s = spdc_state(&SpdcParams::real(0.1).unwrap(), 7).unwrap();
    let rho = event_channel::apply_loss(&s, "1", 1.0).unwrap();
    assert!(max_diff(rho.matrix(), s.to_density().matrix()) < 1e-14);

    let space = FockSpace::new(&["1"], 2).unwrap();
    let one = TruncatedFockState::from_amplitudes(space, vec![c(0.0), c(1.0), c(0.0)]).unwrap();
    let gone = event_channel::apply_loss(&one, "1", 0.0).unwrap();
    assert!((gone.matrix()[(0, 0)] - c(1.0)).norm() < 1e-14);
    assert!((gone.trace() - 1.0).abs() < 1e-14);
}

#[test]
fn lossy_coincidences_scale_with_both_arms() {
    for (e1, e2) in [(0.5, 1.0), (0.3, 0.8), (1.0, 0.25)] {
        let run = event_channel::run_event_channel(
            InputKind::Spdc { chi: SpdcParams::real(0.05).unwrap() },
            ChannelParams::new(1.0, e1, e2).unwrap(),
            None,
        )
        .unwrap();
        let p = 0.05f64 * 0.05;
        assert!((run.coincidence().unwrap() - e1 * e2 * p).abs() <= 5.0 * p * p);
    }
}

#[test]
fn oracle_matches_first_order_formula() {
    for chi in [0.01, 0.05, 0.1] {
        for xi in [0.1, 0.3, 0.5, 0.7, 0.9] {
            for eta1 in [0.5, 1.0] {
                for eta2 in [0.5, 1.0] {
                    let run = event_channel::run_event_channel(
                        InputKind::Spdc { chi: SpdcParams::real(chi).unwrap() },
                        ChannelParams::new(xi, eta1, eta2).unwrap(),
                        None,
                    )
                    .unwrap();
                    let p = chi * chi;
                    let analytic = xi * eta1 * eta2 * p / (1.0 + p);
                    assert!((run.coincidence().unwrap() - analytic).abs() <= 5.0 * p * p);
                    assert!((run.analytic.coincidence - analytic).abs() < 1e-15);
                }
            }
        }
    }
}

#[test]
fn first_order_state_gives_exact_identity_coincidence() {
    let chi = SpdcParams::real(0.1).unwrap();
    let s = spdc_state_first_order(&chi, 2).unwrap();
    let rho = s.to_density();
    let p = coincidence_expectation(&rho, "1", "2").unwrap();
    assert!((p - 0.01 / 1.01).abs() < 1e-15);
    assert!(coincidence_expectation(&rho, "1", "1").is_err());
}

#[test]
fn singles_do_not_depend_on_xi() {
    for chi in [0.01, 0.05, 0.1] {
        for (e1, e2) in [(1.0, 1.0), (0.5, 1.0), (0.5, 0.5)] {
            let singles = |xi: f64| {
                let run = event_channel::run_event_channel(
                    InputKind::Spdc { chi: SpdcParams::real(chi).unwrap() },
                    ChannelParams::new(xi, e1, e2).unwrap(),
                    None,
                )
                .unwrap();
                (run.singles(0).unwrap(), run.singles(1).unwrap())
            };
            let reference = singles(1.0);
            for xi in [0.1, 0.3, 0.5, 0.7, 0.9] {
                let s = singles(xi);
                assert!((s.0 - reference.0).abs() <= 1e-12, "chi {chi} xi {xi}");
                assert!((s.1 - reference.1).abs() <= 1e-12);
            }
            let p = chi * chi;
            assert!((reference.0 - e1 * p).abs() <= 5.0 * p * p);
        }
    }
}

#[test]
fn identity_channel_keeps_heralded_fraction() {
    let run = event_channel::run_event_channel(
        InputKind::Spdc { chi: SpdcParams::real(0.1).unwrap() },
        ChannelParams::new(1.0, 1.0, 1.0).unwrap(),
        None,
    )
    .unwrap();
    assert!((run.coincidence().unwrap() / run.singles(0).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn coherent_states_pass_through() {
    for (a, b) in [(0.5, 0.5), (0.3, -0.2), (0.0, 0.5)] {
        let (alpha, beta) = (c(a), Complex64::new(0.0, b));
        let target = coherent_state(&["1", "2"], &[alpha, beta], 8).unwrap();
        for xi in [0.0, 0.2, 0.5, 0.8, 0.99] {
            let run = event_channel::run_event_channel(
                InputKind::Coherent { alpha, beta },
                ChannelParams::new(xi, 1.0, 1.0).unwrap(),
                Some(8),
            )
            .unwrap();
            assert!(run.reduced.fidelity_with_pure(&target).unwrap() >= 1.0 - 1e-6, "a {a} b {b} xi {xi}");
        }
    }
}

#[test]
fn polarization_pairs() {
    let chi = 0.1;
    for xi in [0.1, 0.5, 0.9] {
        let run = event_channel::run_event_channel(
            InputKind::PolarizationSpdc { chi: SpdcParams::real(chi).unwrap() },
            ChannelParams::new(xi, 1.0, 1.0).unwrap(),
            None,
        )
        .unwrap();
        let p = chi * chi;
        assert!((run.same_polarization_coincidence().unwrap() - xi * p).abs() <= 5.0 * p * p);
        assert!(run.cross_polarization_coincidence().unwrap() <= 2.0 * p * p);
    }
}

#[test]
fn phase_delay_examples() {
    let run = event_channel::run_event_channel(
        InputKind::Spdc { chi: SpdcParams::real(0.1).unwrap() },
        ChannelParams::new(0.6, 0.9, 0.7).unwrap(),
        None,
    )
    .unwrap();
    assert_eq!(event_channel::phase_delay_invariance_check(&run.reduced, "2", 0.0).unwrap(), 0.0);
    assert!(event_channel::phase_delay_invariance_check(&run.reduced, "2", std::f64::consts::FRAC_PI_3).unwrap() <= 1e-12);
    assert!(event_channel::phase_delay_invariance_check(&run.reduced, "1", std::f64::consts::TAU).unwrap() <= 1e-15);
}

#[test]
fn vacuum_expectations() {
    let rho = TruncatedFockState::vacuum(&["1", "2"], 2).unwrap().to_density();
    assert_eq!(coincidence_expectation(&rho, "1", "2").unwrap(), 0.0);
    assert_eq!(singles_expectation(&rho, "1").unwrap(), 0.0);
    let space = FockSpace::new(&["1", "2"], 2).unwrap();
    let mut amps = vec![c(0.0); space.dimension()];
    amps[space.index_of(&[1, 1]).unwrap()] = c(1.0);
    let pair = TruncatedFockState::from_amplitudes(space, amps).unwrap().to_density();
    assert!((coincidence_expectation(&pair, "1", "2").unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn reduction_of_product_state() {
    let a = random_state(&["1", "2"], 2, 5);
    let b = random_state(&["3"], 2, 6);
    let rho = a.tensor(&b).unwrap().to_density().partial_trace(&["1", "2"]).unwrap();
    assert!(max_diff(rho.matrix(), a.to_density().matrix()) < 1e-14);
    let all = a.to_density().partial_trace(&["1", "2"]).unwrap();
    assert!(max_diff(all.matrix(), a.to_density().matrix()) < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn beamsplitter_is_binomial(n in 0usize..=6, xi in 0.0f64..=1.0) {
        let space = FockSpace::new(&["1", "3"], 6).unwrap();
        let mut amps = vec![c(0.0); space.dimension()];
        amps[space.index_of(&[n, 0]).unwrap()] = c(1.0);
        let out = apply_event_beamsplitter(&TruncatedFockState::from_amplitudes(space, amps).unwrap(), "1", "3", xi)
            .unwrap();
        let (cs, sn) = (xi.sqrt(), (1.0 - xi).sqrt());
        for k in 0..=n {
            let expected = binomial(n, k).sqrt() * cs.powi((n - k) as i32) * (-sn).powi(k as i32);
            prop_assert!((out.amplitude(&[n - k, k]).unwrap() - c(expected)).norm() < 1e-10);
        }
    }

    #[test]
    fn beamsplitter_preserves_norm_and_number(
        seed in any::<u64>(),
        cutoff in 1usize..=4,
        xi in prop::sample::select(vec![0.0, 0.25, 0.5, 0.75, 1.0]),
    ) {
        // Photon number in (1, 3) bounded by the cutoff keeps the output in the space.
        let psi = random_state_where(&["1", "2", "3", "4"], cutoff, seed, |o| o[0] + o[2] <= cutoff);
        let out = apply_event_beamsplitter(&psi, "1", "3", xi).unwrap();
        prop_assert!((out.norm_sqr() - psi.norm_sqr()).abs() < 1e-10);
        prop_assert!(out.leakage() < 1e-10);
        prop_assert!((out.total_photon_number() - psi.total_photon_number()).abs() < 1e-10);

        // Otherwise the weight pushed past the cutoff is booked as leakage.
        let full = random_state(&["1", "2", "3", "4"], cutoff, seed);
        let out = apply_event_beamsplitter(&full, "1", "3", xi).unwrap();
        prop_assert!((out.norm_sqr() + out.leakage() - full.norm_sqr()).abs() < 1e-10);
    }

    #[test]
    fn kraus_loss_matches_ancilla_loss(seed in any::<u64>(), eta in 0.0f64..=1.0, cutoff in 1usize..=4) {
        let psi = random_state(&["1", "2"], cutoff, seed);
        let ancilla = event_channel::apply_loss(&psi, "1", eta).unwrap();
        let kraus = psi.to_density().apply_loss("1", eta).unwrap();
        prop_assert!(max_diff(ancilla.matrix(), kraus.matrix()) < 1e-12);
        prop_assert!((kraus.trace() - 1.0).abs() < 1e-10);
        prop_assert!((kraus.mean_photon_number("1").unwrap() - eta * psi.mean_photon_number("1").unwrap()).abs() < 1e-10);
    }

    #[test]
    fn channel_output_is_a_state(chi in 0.0f64..0.2, xi in 0.0f64..=1.0, e1 in 0.0f64..=1.0, e2 in 0.0f64..=1.0) {
        let run = event_channel::run_event_channel(
            InputKind::Spdc { chi: SpdcParams::real(chi).unwrap() },
            ChannelParams::new(xi, e1, e2).unwrap(),
            None,
        ).unwrap();
        let rho: &DensityState = &run.reduced;
        prop_assert!((rho.trace() - 1.0).abs() < 1e-10);
        prop_assert!(rho.hermiticity_error() < 1e-12);
        prop_assert!(rho.min_eigenvalue() > -1e-12);
        let traced = rho.partial_trace(&["1"]).unwrap();
        prop_assert!((traced.trace() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn phase_delay_never_changes_coincidences(delta in 0.0f64..std::f64::consts::TAU, xi in 0.0f64..=1.0) {
        let run = event_channel::run_event_channel(
            InputKind::Spdc { chi: SpdcParams::real(0.1).unwrap() },
            ChannelParams::new(xi, 0.8, 0.6).unwrap(),
            None,
        ).unwrap();
        prop_assert!(event_channel::phase_delay_invariance_check(&run.reduced, "2", delta).unwrap() <= 1e-12);
    }
}
