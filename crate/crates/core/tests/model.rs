//! Chern-insulator model: projectors, OW modes, stabilizer conditions, form-factor
//! zeros, overcompleteness and the ground-state correlation matrix.

use std::f64::consts::PI;

use steer_core::chern::*;
use steer_core::linalg::{eigvalsh, C64};
use steer_core::observables::{chern_marker, chern_real_space, TripleRegion, TRIPLE_RADIUS_FRACTION};
use steer_core::Error;

fn close(a: (f64, f64), b: (f64, f64)) -> bool {
    let d = |u: f64, v: f64| ((u - v + PI).rem_euclid(2.0 * PI) - PI).abs();
    d(a.0, b.0) < 1e-6 && d(a.1, b.1) < 1e-6
}

#[test]
fn untruncated_modes_stabilize_ground_state() {
    let lat = Lattice::new(8).unwrap();
    let g = ground_state_correlation(lat, 1.5).unwrap();
    let modes = OwModeSet::uniform(lat, 1.5, None).unwrap();
    for m in &modes.modes {
        let occ = g.occupation(&m.mode).unwrap();
        let target = f64::from(m.band.target());
        assert!((occ - target).abs() < 1e-8, "{:?} {:?} at ({}, {}): {occ}", m.orbital, m.band, m.x, m.y);
    }
}

#[test]
fn truncated_lower_modes_stay_mostly_filled() {
    let lat = Lattice::new(12).unwrap();
    let g = ground_state_correlation(lat, 1.5).unwrap();
    let modes = OwModeSet::uniform(lat, 1.5, Some(2)).unwrap();
    let worst_lower = modes.modes.iter().filter(|m| m.band == Band::Lower).map(|m| g.occupation(&m.mode).unwrap()).fold(1.0, f64::min);
    let worst_upper = modes.modes.iter().filter(|m| m.band == Band::Upper).map(|m| g.occupation(&m.mode).unwrap()).fold(0.0, f64::max);
    assert!(worst_lower >= 0.9, "lower {worst_lower}");
    assert!(worst_upper <= 0.1, "upper {worst_upper}");
}

#[test]
fn truncation_window_and_identity_when_wide() {
    let lat = Lattice::new(8).unwrap();
    let full = build_ow_mode(lat, 1.0, 3, 4, Orbital::A, Band::Lower).unwrap();
    let t = truncate(lat, &full, 1).unwrap();
    assert_eq!(t.mode.support().len(), 2 * 9);
    assert!((t.mode.amps().norm() - 1.0).abs() < 1e-12);
    let same = truncate(lat, &full, 4).unwrap();
    assert!((same.mode.amps() - full.mode.amps()).norm() < 1e-12);
    assert!(truncate(lat, &full, 0).is_err());
}

#[test]
fn overlap_matches_momentum_space_sum() {
    let lat = Lattice::new(8).unwrap();
    let alpha = 1.3;
    let a = build_ow_mode(lat, alpha, 0, 0, Orbital::A, Band::Lower).unwrap();
    let b = build_ow_mode(lat, alpha, 0, 0, Orbital::B, Band::Lower).unwrap();
    let real_space = a.mode.inner(&b.mode);
    // Oracle: Σ_k τ_B^† P(k) τ_A normalized by the two orbital weights.
    let (ta, tb) = (Orbital::A.tau(), Orbital::B.tau());
    let mut cross = C64::new(0.0, 0.0);
    let (mut na, mut nb) = (0.0, 0.0);
    for &(kx, ky) in &lat.momenta() {
        let (_, p) = band_projectors(kx, ky, alpha).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                cross += tb[i].conj() * p[(i, j)] * ta[j];
                na += (ta[i].conj() * p[(i, j)] * ta[j]).re;
                nb += (tb[i].conj() * p[(i, j)] * tb[j]).re;
            }
        }
    }
    let momentum_space = cross / (na * nb).sqrt();
    assert!((real_space - momentum_space).norm() < 1e-10, "{real_space} vs {momentum_space}");
}

#[test]
fn form_factor_zeros_in_chern_phase() {
    let lat = Lattice::new(16).unwrap();
    // n̂(k) = ∓s_ν with s_A = −s_B = x̂ solves to sin ky = 0, cos kx = α − 1 = 0.
    let expected = [
        (Orbital::A, Band::Lower, (PI / 2.0, 0.0)),
        (Orbital::A, Band::Upper, (3.0 * PI / 2.0, 0.0)),
        (Orbital::B, Band::Lower, (3.0 * PI / 2.0, 0.0)),
        (Orbital::B, Band::Upper, (PI / 2.0, 0.0)),
    ];
    for (o, b, k) in expected {
        let zeros = form_factor_zeros(&lat, o, b, 1.0).unwrap();
        assert_eq!(zeros.len(), 1, "{o:?} {b:?}: {zeros:?}");
        assert!(close(zeros[0], k), "{o:?} {b:?}: {zeros:?}");
    }
}

#[test]
fn form_factor_zero_refined_off_grid() {
    // n̂ = s_A needs sin ky = 0 and cos kx = α − cos ky: at α = 0.5 that is
    // (2π/3, 0), which is off an L = 10 grid.
    let lat = Lattice::new(10).unwrap();
    let zeros = form_factor_zeros(&lat, Orbital::A, Band::Lower, 0.5).unwrap();
    assert_eq!(zeros.len(), 1);
    assert!(close(zeros[0], (2.0 * PI / 3.0, 0.0)), "{zeros:?}");
}

#[test]
fn no_form_factor_zeros_in_trivial_phase() {
    let lat = Lattice::new(12).unwrap();
    for o in Orbital::ALL {
        for b in Band::ALL {
            assert!(form_factor_zeros(&lat, o, b, 3.0).unwrap().is_empty());
        }
    }
}

#[test]
fn form_factors_are_normalized_on_grid() {
    let lat = Lattice::new(12).unwrap();
    for o in Orbital::ALL {
        for b in Band::ALL {
            let z = form_factor_norm(&lat, 1.0, o, b).unwrap();
            let ks = lat.momenta();
            let mean: f64 = ks.iter().map(|&(kx, ky)| form_factor_sq(kx, ky, 1.0, o, b, z).unwrap()).sum::<f64>() / ks.len() as f64;
            assert!((mean - 1.0).abs() < 1e-12);
            let amp: f64 = ks.iter().map(|&(kx, ky)| form_factor(kx, ky, 1.0, o, b, z).unwrap().norm_sqr()).sum::<f64>() / ks.len() as f64;
            assert!((amp - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn single_orbital_families_are_incomplete_in_chern_phase() {
    // The zero at (π/2, 0) lies on the grid for L = 8.
    let lat = Lattice::new(8).unwrap();
    let modes = OwModeSet::uniform(lat, 1.0, None).unwrap();
    let n = lat.n_sites();
    for band in Band::ALL {
        assert_eq!(overcomplete_rank(&modes, band, &[Orbital::A]), n - 1);
        assert_eq!(overcomplete_rank(&modes, band, &[Orbital::B]), n - 1);
        assert_eq!(overcomplete_rank(&modes, band, &Orbital::ALL), n);
    }
    let trivial = OwModeSet::uniform(lat, 3.0, None).unwrap();
    assert_eq!(overcomplete_rank(&trivial, Band::Lower, &[Orbital::A]), n);
}

#[test]
fn ground_state_is_pure_with_half_filling() {
    let lat = Lattice::new(8).unwrap();
    let g = ground_state_correlation(lat, 1.0).unwrap();
    assert!((g.total_charge() - 64.0).abs() < 1e-10);
    assert!(g.purity_deviation() < 1e-12);
    let vals = eigvalsh(g.matrix());
    assert!(vals.iter().all(|&v| v.abs() < 1e-10 || (v - 1.0).abs() < 1e-10));
}

#[test]
fn gapless_alpha_is_rejected() {
    let lat = Lattice::new(8).unwrap();
    assert!(matches!(ground_state_correlation(lat, 2.0), Err(Error::GapClosed { .. })));
    assert!(matches!(ground_state_correlation(lat, 0.0), Err(Error::GapClosed { .. })));
    let modes = OwModeSet::uniform(lat, 2.0, Some(1)).unwrap();
    assert!(modes.gapless);
}

#[test]
fn chern_number_of_ground_state() {
    for (l, alpha, target, tol) in [(20usize, 1.0, -1.0, 0.05), (12, 3.0, 0.0, 0.05), (12, -1.0, 1.0, 0.05), (12, 1.5, -1.0, 0.05)] {
        let lat = Lattice::new(l).unwrap();
        let g = ground_state_correlation(lat, alpha).unwrap();
        let part = TripleRegion::new(&lat, (l / 2, l / 2), TRIPLE_RADIUS_FRACTION * l as f64).unwrap();
        let c = chern_real_space(&g, &part);
        assert!((c - target).abs() < tol, "L={l} α={alpha}: {c}");
    }
}

#[test]
fn chern_marker_of_ground_state() {
    let lat = Lattice::new(12).unwrap();
    let g = ground_state_correlation(lat, 1.0).unwrap();
    let m = chern_marker(&g, &lat).unwrap();
    let interior = m.mean_where(|x, y| (4..8).contains(&x) && (4..8).contains(&y)).unwrap();
    assert!((interior + 1.0).abs() < 0.1, "{interior}");
    let trivial = chern_marker(&ground_state_correlation(lat, 3.0).unwrap(), &lat).unwrap();
    assert!(trivial.mean_where(|_, _| true).unwrap().abs() < 0.1);
}

#[test]
fn chern_region_must_fit_lattice() {
    let lat = Lattice::new(8).unwrap();
    assert!(matches!(TripleRegion::new(&lat, (0, 0), 4.0), Err(Error::RegionTooLarge(_))));
}

#[test]
fn mode_set_json_round_trip() {
    let lat = Lattice::new(6).unwrap();
    let modes = OwModeSet::uniform(lat, 1.0, Some(1)).unwrap();
    let json = serde_json::to_string(&modes.to_records()).unwrap();
    let back: Vec<OwModeRecord> = serde_json::from_str(&json).unwrap();
    let rebuilt = OwModeSet::from_records(lat, &back).unwrap();
    for (a, b) in modes.modes.iter().zip(&rebuilt.modes) {
        assert_eq!((a.x, a.y, a.orbital, a.band), (b.x, b.y, b.orbital, b.band));
        assert!((a.mode.amps() - b.mode.amps()).norm() < 1e-15);
    }
}

#[test]
fn domain_wall_modes_use_local_alpha() {
    let lat = Lattice::new(8).unwrap();
    let field = AlphaField::domain_wall(8, 1.0, 3.0);
    assert_eq!(field.at(0, 2), 1.0);
    assert_eq!(field.at(0, 1), 3.0);
    let modes = OwModeSet::build(lat, &field, Some(1)).unwrap();
    let inner = OwModeSet::uniform(lat, 1.0, Some(1)).unwrap();
    let outer = OwModeSet::uniform(lat, 3.0, Some(1)).unwrap();
    let pick = |s: &OwModeSet, y| s.get(3, y, Orbital::A, Band::Lower).mode.amps().clone();
    assert_eq!(pick(&modes, 4), pick(&inner, 4));
    assert_eq!(pick(&modes, 0), pick(&outer, 0));
}
