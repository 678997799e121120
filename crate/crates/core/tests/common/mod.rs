//! Shared helpers for integration tests.
#![allow(dead_code)]

use steer_core::fock::{evolve_gaussian, FockState};
use steer_core::gaussian::ModeVector;
use steer_core::linalg::{CMat, CVec, C64};
use steer_core::rng::RandomStream;

pub fn complex_normal(rng: &mut RandomStream) -> C64 {
    C64::new(rng.normal(), rng.normal())
}

pub fn random_hermitian(n: usize, rng: &mut RandomStream) -> CMat {
    let a = CMat::from_fn(n, n, |_, _| complex_normal(rng));
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Random normalized mode on `n` modes.
pub fn random_mode(n: usize, rng: &mut RandomStream) -> ModeVector {
    let v = CVec::from_fn(n, |_, _| complex_normal(rng));
    ModeVector::normalized(v).expect("nonzero")
}

/// Random pure Gaussian state: a random basis state rotated by a random unitary.
pub fn random_gaussian_state(n: usize, rng: &mut RandomStream) -> FockState {
    let occ: Vec<u8> = (0..n).map(|_| u8::from(rng.uniform() < 0.5)).collect();
    let basis = FockState::basis(&occ).expect("small");
    let m = random_hermitian(n, rng) * C64::new(0.0, 1.0);
    evolve_gaussian(&basis, &m).expect("dims").normalized().expect("unitary keeps norm")
}

/// Two orthonormal random modes (Gram–Schmidt).
pub fn orthonormal_pair(n: usize, rng: &mut RandomStream) -> (ModeVector, ModeVector) {
    let a = random_mode(n, rng);
    let b = CVec::from_fn(n, |_, _| complex_normal(rng));
    let proj = a.amps().dotc(&b);
    let b = b - a.amps() * proj;
    (a, ModeVector::normalized(b).expect("generic"))
}
