//! Occupation-density equations of motion: fixed point, exact coherence decay,
//! analytic bounds and the convergence timescale.

use steer_core::chern::Lattice;
use steer_core::linalg::C64;
use steer_core::lindblad::*;
use steer_core::Error;

fn filled(n: usize, coherence: C64) -> BandOccupations {
    BandOccupations::uniform(n, 1.0, 0.0, coherence)
}

#[test]
fn steady_state_has_zero_rhs() {
    for (l, alpha) in [(12, 1.0), (16, 1.5), (10, 3.0)] {
        let lat = Lattice::new(l).unwrap();
        let rates = Rates::new(&lat, alpha).unwrap();
        let s = BandOccupations::uniform(l * l, 0.0, 1.0, C64::new(0.0, 0.0));
        for n_a in [0.0, 0.5, 1.0] {
            let d = eom_rhs(&s, &rates, n_a).unwrap();
            let worst = d.g_plus.iter().chain(&d.g_minus).map(|v| v.abs()).fold(0.0, f64::max);
            assert!(worst < 1e-12, "L={l} alpha={alpha} n={n_a}: {worst}");
            assert!(d.max_coherence() == 0.0);
        }
    }
}

#[test]
fn grid_mismatch_is_rejected() {
    let lat = Lattice::new(8).unwrap();
    let rates = Rates::new(&lat, 1.0).unwrap();
    let s = BandOccupations::uniform(10, 0.0, 1.0, C64::new(0.0, 0.0));
    assert!(matches!(eom_rhs(&s, &rates, 0.5), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn coherence_follows_exact_solution() {
    let l = 12;
    let lat = Lattice::new(l).unwrap();
    let rates = Rates::new(&lat, 1.0).unwrap();
    let a0 = C64::new(0.3, -0.2);
    let mut p = LindbladParams::new(l, 1.0, 0.5);
    p.t_max = Some(1.5);
    let series = integrate(&p, &filled(l * l, a0)).unwrap();
    let t = *series.t.last().unwrap();
    for (k, &z) in series.final_state.coherence.iter().enumerate() {
        let exact = a0 * (-(rates.gamma_plus[k] + rates.gamma_minus[k]) * t).exp();
        assert!((z - exact).norm() < 1e-8, "k={k}: {z} vs {exact}");
    }
}

#[test]
fn exponential_bounds_hold_pointwise() {
    for (alpha, n_a) in [(1.0, 0.5), (1.0, 1.0), (1.5, 0.25), (3.0, 0.75), (-1.2, 0.5)] {
        let l = 16;
        let p = LindbladParams::new(l, alpha, n_a);
        let init = BandOccupations::uniform(l * l, 1.0, 0.0, C64::new(0.1, 0.0));
        let series = integrate(&p, &init).unwrap();
        let v = series.max_bound_violation();
        assert!(v <= 1e-9, "alpha={alpha} n={n_a}: violation {v}");
    }
}

#[test]
fn densities_converge_by_the_default_horizon() {
    let l = 16;
    let series = integrate(&LindbladParams::new(l, 1.0, 0.5), &filled(l * l, C64::new(0.0, 0.0))).unwrap();
    let gp = *series.g_plus_mean.last().unwrap();
    let gm = *series.g_minus_mean.last().unwrap();
    assert!(gp < 1e-3 && (gm - 1.0).abs() < 1e-3, "g+ {gp}, g- {gm}");
}

#[test]
fn no_gain_channel_without_ancilla_particles() {
    let l = 12;
    let init = BandOccupations::uniform(l * l, 0.5, 0.2, C64::new(0.0, 0.0));
    let series = integrate(&LindbladParams::new(l, 1.0, 0.0), &init).unwrap();
    for w in series.g_minus_mean.windows(2) {
        assert!(w[1] <= w[0] + 1e-14, "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn combined_rates_positive_where_single_orbital_factor_vanishes() {
    let lat = Lattice::new(16).unwrap();
    let rates = Rates::new(&lat, 1.0).unwrap();
    for n in 0..2 {
        let single_min = rates.f2[0][n].iter().copied().fold(f64::INFINITY, f64::min);
        assert!(single_min < 1e-12, "band {n}: orbital A factor should vanish on the grid");
    }
    assert!(rates.delta_minus() > 0.1 && rates.delta_plus() > 0.1);
}

#[test]
fn convergence_time_is_size_independent() {
    // Each rate sums a band projector over both orbitals (trace 1) divided by
    // the grid average of the same weight (1/2), so gamma = 2 identically.
    let t24 = convergence_time(&Lattice::new(24).unwrap(), 1.0).unwrap();
    let t48 = convergence_time(&Lattice::new(48).unwrap(), 1.0).unwrap();
    assert!(t24.is_finite() && t24 > 0.0);
    assert!(((t24 - t48) / t24).abs() < 0.01);
    assert!((t24 - 0.5).abs() < 1e-12);
    assert!(convergence_time(&Lattice::new(12).unwrap(), 2.0).is_err());
}

#[test]
fn measured_decay_rate_is_consistent_with_the_timescale() {
    let l = 16;
    let series = integrate(&LindbladParams::new(l, 1.0, 0.5), &filled(l * l, C64::new(0.0, 0.0))).unwrap();
    let rate = series.plus_decay_rate().unwrap();
    let bound_rate = 0.5 * series.delta_plus;
    let inv_t = 1.0 / series.t_conv;
    assert!(rate >= bound_rate - 1e-6, "rate {rate} below bound {bound_rate}");
    assert!(rate <= 3.0 * inv_t && rate >= inv_t / 3.0, "rate {rate} vs 1/T_conv {inv_t}");
}

#[test]
fn oversized_step_is_reported_unstable() {
    let l = 8;
    let mut p = LindbladParams::new(l, 1.0, 0.5);
    p.dt = Some(5.0);
    p.t_max = Some(50.0);
    let r = integrate(&p, &filled(l * l, C64::new(0.0, 0.0)));
    assert!(matches!(r, Err(Error::Unstable { .. })), "{r:?}");
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(LindbladParams::new(8, 1.0, 1.5).validate().is_err());
    let mut p = LindbladParams::new(8, 1.0, 0.5);
    p.dt = Some(-0.1);
    assert!(p.validate().is_err());
}
