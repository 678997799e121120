//! Symmetry classes: the ten-row correspondence table, algebra and group
//! closure, POVM constructions and inadmissibility witnesses.

use steer_core::linalg::{expm, CMat, C64};
use steer_core::rng::RandomStream;
use steer_core::symmetry::*;

#[test]
fn correspondence_table_holds_on_all_rows() {
    let mut rng = RandomStream::new(2024);
    for class in ClassLabel::ALL {
        let row = verify_correspondence(class, 8, 100, &mut rng).unwrap();
        assert!(row.algebra_max_residual <= 1e-12, "{class:?} algebra {}", row.algebra_max_residual);
        assert!(row.group_max_residual <= SYM_TOL, "{class:?} group {}", row.group_max_residual);
        for p in &row.partner_checks {
            assert!(p.pass, "{class:?} partner {:?} residual {}", p.kind, p.max_residual);
        }
        for (other, status) in &row.non_partner {
            assert!(!matches!(status, NonPartnerStatus::UnexpectedPass { .. }), "{class:?}: {other:?} passed");
        }
        assert!(row.pass);
    }
}

#[test]
fn named_rows() {
    let mut rng = RandomStream::new(7);
    // A -> AIII: chiral symmetry with S.
    let row = verify_correspondence(ClassLabel::A, 4, 20, &mut rng).unwrap();
    assert_eq!(row.meo_class, ClassLabel::AIII);
    assert_eq!(row.partner_checks.len(), 1);
    assert_eq!(row.partner_checks[0].kind, SymKind::Cs);

    // CII -> AII: odd time reversal with Omega.
    let row = verify_correspondence(ClassLabel::CII, 4, 20, &mut rng).unwrap();
    assert_eq!(row.meo_class, ClassLabel::AII);
    assert_eq!((row.partner_checks[0].kind, row.partner_checks[0].sign), (SymKind::Trs, -1));

    // BDI -> AI: particle-hole classes fail on generic samples.
    let row = verify_correspondence(ClassLabel::BDI, 4, 20, &mut rng).unwrap();
    assert_eq!(row.meo_class, ClassLabel::AI);
    let d = row.non_partner.iter().find(|(c, _)| *c == ClassLabel::D).unwrap();
    assert!(matches!(d.1, NonPartnerStatus::Fails { min_residual } if min_residual > 1e-3));
}

#[test]
fn unrestricted_algebra_accepts_any_matrix() {
    let mut rng = RandomStream::new(1);
    let m = CMat::from_fn(4, 4, |_, _| C64::new(rng.normal(), rng.normal()));
    assert_eq!(algebra_residual(ClassLabel::AIII, &m).unwrap(), 0.0);
    assert!(algebra_residual(ClassLabel::D, &m).unwrap() > 0.1);
}

#[test]
fn class_d_samples_are_real_and_pseudo_orthogonal() {
    let mut rng = RandomStream::new(5);
    let s = s_matrix(6).unwrap();
    for _ in 0..10 {
        let m = sample_stm_algebra(ClassLabel::D, 6, &mut rng).unwrap();
        assert!(m.iter().all(|z| z.im.abs() < 1e-12));
        let r = m.transpose() * &s + &s * &m;
        assert!(r.iter().all(|z| z.norm() < 1e-12));
    }
}

#[test]
fn algebras_close_under_commutators_and_groups_under_products() {
    let mut rng = RandomStream::new(99);
    for class in ClassLabel::ALL {
        for _ in 0..10 {
            let a = sample_stm_algebra(class, 8, &mut rng).unwrap();
            let b = sample_stm_algebra(class, 8, &mut rng).unwrap();
            let comm = &a * &b - &b * &a;
            assert!(algebra_residual(class, &comm).unwrap() < 1e-10, "{class:?} commutator");
            let t = expm(&(a * C64::new(0.2, 0.0))) * expm(&(b * C64::new(0.2, 0.0)));
            assert!(group_relation_residual(class, &t).unwrap() < 1e-10, "{class:?} product");
        }
    }
}

#[test]
fn povm_constructions_satisfy_completeness() {
    assert!(povm_check_construction(AdmissibleClass::A, 0.7, 0.3).unwrap() < POVM_TOL);
    for a in [0.1, 0.9, 2.5] {
        assert!(povm_check_construction(AdmissibleClass::AI, a, 0.0).unwrap() < POVM_TOL);
    }
    assert!(povm_check_construction(AdmissibleClass::BDI, 1.3, 0.0).unwrap() < POVM_TOL);
    assert!(povm_check_construction(AdmissibleClass::D, 0.4, -1.1).unwrap() < POVM_TOL);
}

#[test]
fn complex_witness_matches_closed_form() {
    // M = 0.5 sigma_x lies in u(1, 1); e^{-M^dag} e^{-M} has eigenvalues e^{∓1}.
    // tr(K^dag K) / 4 = det(1 + e^{-2M}) / 4 = (1 + cosh 1) / 2 and the vacuum
    // element is 1, so the slack is (cosh 1 − 1) / 2.
    let m = CMat::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(0.5, 0.0), C64::new(0.5, 0.0), C64::new(0.0, 0.0)]);
    assert!(algebra_residual(ClassLabel::A, &m).unwrap() < 1e-15);
    let (slack, lams) = witness_sample(InadmissibleClass::AIII, &m).unwrap().unwrap();
    assert!((slack - (1f64.cosh() - 1.0) / 2.0).abs() < 1e-12, "{slack}");
    assert!((lams[0] + 1.0).abs() < 1e-12 && (lams[1] - 1.0).abs() < 1e-12);

    let zero = CMat::zeros(2, 2);
    assert!(witness_sample(InadmissibleClass::AIII, &zero).unwrap().is_none());
}

#[test]
fn witnesses_show_strict_slack() {
    let mut rng = RandomStream::new(31);
    for class in InadmissibleClass::ALL {
        let n_modes = if class == InadmissibleClass::DIII { 2 } else { 4 };
        let rep = povm_witness_inadmissible(class, n_modes, 50, 0.5, &mut rng).unwrap();
        assert!(rep.skipped < rep.samples, "{class:?}");
        assert!(rep.min_slack > WITNESS_SLACK, "{class:?} slack {}", rep.min_slack);
        assert!(rep.max_pairing_error < 1e-8, "{class:?} pairing {}", rep.max_pairing_error);
        if class == InadmissibleClass::CII {
            assert!(rep.max_degeneracy_error.unwrap() < 1e-10);
        }
        assert!(rep.pass);
    }
}
