//! Correlation-matrix updates against exact Fock-space evolution on 2–4 modes.

mod common;

use common::*;
use proptest::prelude::*;
use steer_core::fock::{correlation_of, evolve_gaussian, mode_number, ManyBodyOperator};
use steer_core::gaussian::{CorrelationMatrix, SingleParticleUnitary};
use steer_core::linalg::{expm, max_diff, C64};
use steer_core::rng::RandomStream;

const TOL: f64 = 1e-10;
const CASES: u32 = 1000;
/// Conditioning floor: outcomes rarer than this are skipped (the update divides by p).
const MIN_P: f64 = 1e-6;

fn setup(seed: u64, n: usize) -> (RandomStream, steer_core::fock::FockState, CorrelationMatrix) {
    let mut rng = RandomStream::new(seed);
    let psi = random_gaussian_state(n, &mut rng);
    let g = correlation_of(&psi).unwrap();
    (rng, psi, g)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(CASES))]

    #[test]
    fn apply_unitary_matches_fock(seed in any::<u64>(), n in 2usize..=4) {
        let (mut rng, psi, mut g) = setup(seed, n);
        let m = random_hermitian(n, &mut rng) * C64::new(0.0, 1.0);
        let exact = correlation_of(&evolve_gaussian(&psi, &m).unwrap()).unwrap();
        g.apply_unitary(&SingleParticleUnitary::full(expm(&(-&m))).unwrap()).unwrap();
        prop_assert!(max_diff(g.matrix(), exact.matrix()) < TOL);
    }

    #[test]
    fn projective_measurement_matches_fock(seed in any::<u64>(), n in 2usize..=4) {
        let (mut rng, psi, g) = setup(seed, n);
        let w = random_mode(n, &mut rng);
        let num = mode_number(n, w.amps()).unwrap();
        let hole = ManyBodyOperator::identity(n).unwrap().add(&num.scale(C64::new(-1.0, 0.0)));
        for (outcome, op) in [(1u8, &num), (0u8, &hole)] {
            let post = psi.apply(op).unwrap();
            let prob = post.norm().powi(2);
            if prob < MIN_P {
                continue;
            }
            let exact = correlation_of(&post.normalized().unwrap()).unwrap();
            let mut h = g.clone();
            let p = h.project(&w, outcome).unwrap();
            let born = if outcome == 1 { p } else { 1.0 - p };
            prop_assert!((born - prob).abs() < TOL);
            prop_assert!(max_diff(h.matrix(), exact.matrix()) < TOL);
            prop_assert!((h.occupation(&w).unwrap() - f64::from(outcome)).abs() < TOL);
        }
    }

    #[test]
    fn weak_measurement_matches_fock(seed in any::<u64>(), n in 2usize..=4, kappa in 0.01f64..3.0) {
        let (mut rng, psi, g) = setup(seed, n);
        let w = random_mode(n, &mut rng);
        let num = mode_number(n, w.amps()).unwrap();
        let shifted = num.add(&ManyBodyOperator::identity(n).unwrap().scale(C64::new(-0.5, 0.0)));
        // Normalized so that K_+^† K_+ + K_-^† K_- = 1.
        let norm = C64::new(1.0 / (2.0 * kappa.cosh()).sqrt(), 0.0);
        for m in [1i8, -1] {
            let k = shifted.scale(C64::new(f64::from(m) * kappa, 0.0)).exp().scale(norm);
            let post = psi.apply(&k).unwrap();
            let prob = post.norm().powi(2);
            if prob < MIN_P {
                continue;
            }
            let exact = correlation_of(&post.normalized().unwrap()).unwrap();
            prop_assert!((g.weak_probability(&w, kappa, m).unwrap() - prob).abs() < TOL);
            let mut h = g.clone();
            h.weak_update(&w, kappa, m).unwrap();
            prop_assert!(max_diff(h.matrix(), exact.matrix()) < TOL);
        }
    }

    #[test]
    fn fswap_matches_fock(seed in any::<u64>(), n in 2usize..=4) {
        let (mut rng, psi, mut g) = setup(seed, n);
        let (a, b) = orthonormal_pair(n, &mut rng);
        // fSWAP = exp(iπ χ_v^† χ_v) with v = (w_a − w_b)/√2.
        let v = (a.amps() - b.amps()) * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let u = mode_number(n, &v).unwrap().scale(C64::new(0.0, std::f64::consts::PI)).exp();
        let exact = correlation_of(&psi.apply(&u).unwrap()).unwrap();
        let (na, nb) = (g.occupation(&a).unwrap(), g.occupation(&b).unwrap());
        g.fswap(&a, &b).unwrap();
        prop_assert!(max_diff(g.matrix(), exact.matrix()) < TOL);
        prop_assert!((g.occupation(&a).unwrap() - nb).abs() < TOL);
        prop_assert!((g.occupation(&b).unwrap() - na).abs() < TOL);
    }
}
