//! Protocol engine: fast decoupled route against the dense bilayer route, fixed
//! points, conservation laws and determinism.

use proptest::prelude::*;
use steer_core::chern::{ground_state_correlation, AlphaField, Lattice};
use steer_core::protocol::*;
use steer_core::rng::RandomStream;
use steer_core::Error;

fn dense_agrees(mut cfg: ProtocolConfig, cycles: usize, seed: u64) {
    cfg.clamp_every = 0;
    let modes = cfg.build_modes().unwrap();
    let mut rng_fast = RandomStream::new(seed);
    let mut fast = BilayerState::init(&cfg, &mut rng_fast).unwrap();
    let mut rng_dense = rng_fast.clone();
    let mut dense = DenseBilayer::from_state(&fast);
    for _ in 0..cycles {
        run_cycle(&mut fast, &modes, &cfg, &mut rng_fast).unwrap();
        dense_cycle(&mut dense, &modes, &cfg, &mut rng_dense).unwrap();
        assert!(dense.cross_max() < 1e-8, "cross block {}", dense.cross_max());
        assert!(fast.phys.distance(&dense.physical()) < 1e-9, "physical blocks differ by {}", fast.phys.distance(&dense.physical()));
        let anc = dense.ancilla();
        assert!(fast.ancilla.iter().zip(&anc).all(|(a, b)| (a - b).abs() < 1e-12), "ancilla {:?} vs {anc:?}", fast.ancilla);
    }
    assert_eq!(rng_fast.counter(), rng_dense.counter());
}

#[test]
fn fast_route_matches_dense_route_truncated() {
    dense_agrees(ProtocolConfig::uniform(4, 1.5, Some(1), 3, 1).unwrap(), 3, 11);
}

#[test]
fn fast_route_matches_dense_route_untruncated_with_noise() {
    let mut cfg = ProtocolConfig::uniform(4, 1.0, None, 3, 1).unwrap();
    cfg.noise_sigma = 0.3;
    dense_agrees(cfg, 3, 12);
}

#[test]
fn fast_route_matches_dense_route_mixed_domain_wall() {
    let mut cfg = ProtocolConfig::uniform(4, 1.0, Some(1), 2, 1).unwrap();
    cfg.alpha = AlphaField::domain_wall(4, 1.0, 3.0);
    cfg.initial = InitialState::MaximallyMixed;
    cfg.shuffle_order = true;
    dense_agrees(cfg, 2, 13);
}

#[test]
fn ground_state_is_absorbing_for_untruncated_modes() {
    let cfg = ProtocolConfig::uniform(8, 1.5, None, 3, 5).unwrap();
    let modes = cfg.build_modes().unwrap();
    let g_ci = ground_state_correlation(cfg.lattice, 1.5).unwrap();
    let mut rng = RandomStream::new(5);
    let init = BilayerState::init(&cfg, &mut rng).unwrap();
    let mut state = BilayerState::from_parts(cfg.lattice, g_ci.clone(), init.ancilla).unwrap();
    for _ in 0..3 {
        let stats = run_cycle(&mut state, &modes, &cfg, &mut rng).unwrap();
        assert_eq!(stats.mismatches, 0);
        assert!(state.phys.distance(&g_ci) < 1e-8);
    }
}

#[test]
fn charge_window_is_enforced() {
    let mut cfg = ProtocolConfig::uniform(4, 1.0, Some(1), 1, 0).unwrap();
    for q in [16, 48] {
        cfg.charge = q;
        assert!(matches!(cfg.validate(), Err(Error::ChargeOutOfRange { .. })));
    }
    cfg.charge = 17;
    assert!(cfg.validate().is_ok());
    cfg.noise_sigma = 1.5;
    assert!(cfg.validate().is_err());
}

#[test]
fn ensemble_is_independent_of_worker_count() {
    let mut cfg = ProtocolConfig::uniform(4, 1.5, Some(1), 2, 21).unwrap();
    cfg.trajectories = 5;
    let modes = cfg.build_modes().unwrap();
    let schedule = Schedule::default();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_ensemble(&cfg, &modes, &schedule).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.trajectories, b.trajectories);
    assert_eq!(a.mean_g.matrix(), b.mean_g.matrix());
}

#[test]
fn trajectory_is_reproducible_from_seed() {
    let cfg = ProtocolConfig::uniform(4, 2.5, Some(1), 3, 99).unwrap();
    let modes = cfg.build_modes().unwrap();
    let (a, _) = run_trajectory(&cfg, &modes, &Schedule::default(), 3);
    let (b, _) = run_trajectory(&cfg, &modes, &Schedule::default(), 3);
    assert_eq!(a, b);
    let (c, _) = run_trajectory(&cfg, &modes, &Schedule::default(), 4);
    assert_ne!(a.seed, c.seed);
}

#[test]
fn ancilla_redistribution_conserves_ancilla_charge() {
    let lat = Lattice::new(6).unwrap();
    let mut rng = RandomStream::new(8);
    let mut occ = vec![0.0; lat.n_modes()];
    for v in occ.iter_mut().take(30) {
        *v = 1.0;
    }
    let g = steer_core::gaussian::CorrelationMatrix::diagonal(&vec![0.0; lat.n_modes()]);
    let mut state = BilayerState::from_parts(lat, g, occ.clone()).unwrap();
    let mut moved = false;
    for _ in 0..5 {
        state.ancilla_redistribute(&mut rng).unwrap();
        assert_eq!(state.ancilla.iter().sum::<f64>(), 30.0);
        assert!(state.ancilla.iter().all(|&v| v == 0.0 || v == 1.0));
        moved |= state.ancilla != occ;
    }
    assert!(moved, "random hopping should move particles");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cycles_conserve_charge_and_purity(seed in any::<u64>(), alpha in prop::sample::select(vec![0.5, 1.5, 2.5, 3.5]), sigma in 0.0f64..0.6) {
        let mut cfg = ProtocolConfig::uniform(4, alpha, Some(1), 3, seed).unwrap();
        cfg.noise_sigma = sigma;
        cfg.charge = 17 + (seed % 30) as usize;
        let modes = cfg.build_modes().unwrap();
        let mut rng = RandomStream::new(seed);
        let mut state = BilayerState::init(&cfg, &mut rng).unwrap();
        let q0 = state.total_charge();
        prop_assert_eq!(q0, cfg.charge as f64);
        for _ in 0..3 {
            run_cycle(&mut state, &modes, &cfg, &mut rng).unwrap();
            prop_assert!((state.total_charge() - q0).abs() < CHARGE_TOL);
            prop_assert!(state.phys.purity_deviation() < 1e-8);
            prop_assert!(state.phys.hermiticity_residual() == 0.0);
        }
    }
}
