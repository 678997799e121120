//! Observables: Chern number invariants, entropies, contour, correlation decay,
//! fits, spectral gap and regularization.

mod common;

use proptest::prelude::*;
use steer_core::chern::{ground_state_correlation, Lattice};
use steer_core::gaussian::{CorrelationMatrix, SingleParticleUnitary};
use steer_core::linalg::{eigvalsh, expm, C64};
use steer_core::observables::*;
use steer_core::protocol::{run_ensemble, ProtocolConfig, Schedule};
use steer_core::rng::RandomStream;
use steer_core::Error;

/// Random pure state with `k` particles on `n` modes.
fn random_pure(n: usize, k: usize, rng: &mut RandomStream) -> CorrelationMatrix {
    let occ: Vec<u8> = (0..n).map(|i| u8::from(i < k)).collect();
    let mut g = CorrelationMatrix::product_state(n, &occ).unwrap();
    let h = common::random_hermitian(n, rng) * C64::new(0.0, 1.0);
    g.apply_unitary(&SingleParticleUnitary::full(expm(&h)).unwrap()).unwrap();
    g
}

/// Random mixed state: a unitary rotation of random occupations in [0, 1].
fn random_mixed(n: usize, rng: &mut RandomStream) -> CorrelationMatrix {
    let occ: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
    let mut g = CorrelationMatrix::diagonal(&occ);
    let h = common::random_hermitian(n, rng) * C64::new(0.0, 1.0);
    g.apply_unitary(&SingleParticleUnitary::full(expm(&h)).unwrap()).unwrap();
    g
}

#[test]
fn chern_vanishes_for_diagonal_g() {
    let lat = Lattice::new(8).unwrap();
    let occ: Vec<u8> = (0..lat.n_modes()).map(|i| u8::from(i % 3 == 0)).collect();
    let g = CorrelationMatrix::product_state(lat.n_modes(), &occ).unwrap();
    let c = chern_self_averaged(&g, &lat, TRIPLE_RADIUS_FRACTION * 8.0).unwrap();
    assert_eq!(c, 0.0);
}

#[test]
fn chern_is_gauge_invariant() {
    let lat = Lattice::new(10).unwrap();
    let g0 = ground_state_correlation(lat, 1.0).unwrap();
    let part = TripleRegion::new(&lat, (5, 5), 4.0).unwrap();
    let mut rng = RandomStream::new(3);
    let phases: Vec<f64> = (0..lat.n_modes()).map(|_| 2.0 * std::f64::consts::PI * rng.uniform()).collect();
    let mut g = g0.clone();
    g.apply_phases(&phases).unwrap();
    assert!(g.distance(&g0) > 1e-3, "phases should change G");
    let a = chern_real_space(&g0, &part);
    let b = chern_real_space(&g, &part);
    assert!((a - b).abs() < 1e-10, "{a} vs {b}");
}

#[test]
fn triple_region_radius_is_checked() {
    let lat = Lattice::new(8).unwrap();
    assert!(matches!(TripleRegion::new(&lat, (0, 0), 4.0), Err(Error::RegionTooLarge(_))));
    let part = TripleRegion::new(&lat, (3, 3), 3.2).unwrap();
    let mut all: Vec<usize> = part.regions.concat();
    let total = all.len();
    all.sort();
    all.dedup();
    assert_eq!(all.len(), total, "wedges must be disjoint");
}

#[test]
fn contour_of_product_region_is_zero() {
    let g = CorrelationMatrix::product_state(6, &[1, 0, 1, 1, 0, 0]).unwrap();
    for (_, s) in entanglement_contour(&g, &[0, 1, 2, 3]) {
        assert_eq!(s, 0.0);
    }
}

#[test]
fn correlation_decay_of_diagonal_g() {
    let lat = Lattice::new(6).unwrap();
    let occ: Vec<u8> = (0..lat.n_modes()).map(|i| u8::from(i % 2 == 0)).collect();
    let g = CorrelationMatrix::product_state(lat.n_modes(), &occ).unwrap();
    let c = correlation_decay(&g, &lat);
    assert_eq!(c.len(), 4);
    assert!(c[0] > 0.0);
    assert!(c[1..].iter().all(|&v| v == 0.0));
}

#[test]
fn ground_state_correlations_decay_exponentially() {
    let lat = Lattice::new(16).unwrap();
    let g = ground_state_correlation(lat, 1.5).unwrap();
    let c = correlation_decay(&g, &lat);
    let fit = fit_exponential(&c, 2, 4).unwrap();
    assert!(fit.r2 > 0.98, "R^2 = {}", fit.r2);
    assert!(fit.slope < 0.0);
}

#[test]
fn fits_recover_exact_laws() {
    let c: Vec<f64> = (0..=8).map(|r| 0.7 * (-0.9 * r as f64).exp()).collect();
    let e = fit_exponential(&c, 1, 8).unwrap();
    assert!((e.slope + 0.9).abs() < 1e-12 && (e.intercept - 0.7f64.ln()).abs() < 1e-12);
    assert!((e.r2 - 1.0).abs() < 1e-12);

    let l = 16;
    let c: Vec<f64> = (0..=8).map(|r| if r == 0 { 1.0 } else { 2.0 * chord_distance(l, r as f64).powf(-3.0) }).collect();
    let p = fit_power_law(&c, l, 1, 8).unwrap();
    assert!((p.slope + 3.0).abs() < 1e-12);
    let e = fit_exponential(&c, 1, 8).unwrap();
    assert!(p.aic < e.aic);

    assert!(fit_line(&[1.0], &[2.0]).is_err());
    assert!(fit_line(&[1.0, 1.0], &[2.0, 3.0]).is_err());
    assert!((chord_distance(12, 6.0) - 12.0 / std::f64::consts::PI).abs() < 1e-15);
}

#[test]
fn gap_and_regularize_on_plug_in_values() {
    let g = CorrelationMatrix::diagonal(&[0.9, 0.2]);
    assert!((spectral_gap(&g).unwrap() - 0.7).abs() < 1e-12);
    let r = regularize(&g).unwrap();
    assert!(r.distance(&CorrelationMatrix::diagonal(&[1.0, 0.0])) < 1e-12);

    let mut rng = RandomStream::new(11);
    let pure = random_pure(6, 3, &mut rng);
    assert!((spectral_gap(&pure).unwrap() - 1.0).abs() < 1e-9);
    assert!(regularize(&pure).unwrap().distance(&pure) < 1e-9);

    let half = CorrelationMatrix::diagonal(&[0.5 + 1e-10, 0.1]);
    assert!(matches!(spectral_gap(&half), Err(Error::RegularizationUndefined(_))));
    assert!(matches!(regularize(&half), Err(Error::RegularizationUndefined(_))));
}

#[test]
fn ensemble_average_is_nearly_pure_deep_in_the_topological_phase() {
    let mut cfg = ProtocolConfig::uniform(12, 1.6, Some(5), 10, 5).unwrap();
    cfg.trajectories = 4;
    let modes = cfg.build_modes().unwrap();
    let schedule = Schedule { every: 10, chern: false, ..Schedule::default() };
    let ens = run_ensemble(&cfg, &modes, &schedule).unwrap();
    assert_eq!(ens.completed, 4);
    let gap = spectral_gap(&ens.mean_g).unwrap();
    assert!(gap > 0.5, "gap {gap}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mutual_information_is_nonnegative(seed in any::<u64>(), na in 1usize..4, nb in 1usize..4) {
        let mut rng = RandomStream::new(seed);
        let n = na + nb + 2;
        let g = random_mixed(n, &mut rng);
        let a: Vec<usize> = (0..na).collect();
        let b: Vec<usize> = (na..na + nb).collect();
        prop_assert!(mutual_information(&g, &a, &b).unwrap() >= -1e-8);
    }

    #[test]
    fn contour_sums_to_entropy(seed in any::<u64>(), k in 0usize..8) {
        let mut rng = RandomStream::new(seed);
        let g = random_pure(8, k, &mut rng);
        let region = [0usize, 1, 2, 3, 6];
        let contour = entanglement_contour(&g, &region);
        let total: f64 = contour.iter().map(|(_, s)| s).sum();
        prop_assert!(contour.iter().all(|(_, s)| *s >= -1e-12));
        prop_assert!((total - entanglement_entropy(&g, &region)).abs() < 1e-8);
    }

    #[test]
    fn regularize_is_idempotent_and_pure(seed in any::<u64>()) {
        let mut rng = RandomStream::new(seed);
        let g = random_mixed(6, &mut rng);
        prop_assume!(eigvalsh(g.matrix()).iter().all(|v| (v - 0.5).abs() > 1e-6));
        let r = regularize(&g).unwrap();
        prop_assert!(r.purity_deviation() < 1e-10);
        prop_assert!(regularize(&r).unwrap().distance(&r) < 1e-10);
    }
}
