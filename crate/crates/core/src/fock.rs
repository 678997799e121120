//! Exact Fock-space oracle on at most [`MAX_MODES`] modes.
//!
//! Jordan–Wigner with ascending mode order: bit `j` of a basis index is the
//! occupation `n_j`, and `c_i` acting on a basis state clears bit `i` with
//! sign `(-1)^{#set bits below i}`.

use crate::error::{Error, Result};
use crate::gaussian::CorrelationMatrix;
use crate::linalg::{expm, max_diff, CMat, CVec, C64, I, ONE, ZERO};

/// Largest supported number of modes (Fock dimension 1024).
pub const MAX_MODES: usize = 10;

/// Many-body state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct FockState {
    n_modes: usize,
    amps: CVec,
}

/// Dense operator on the Fock space of `n_modes` modes.
#[derive(Clone, Debug, PartialEq)]
pub struct ManyBodyOperator {
    n_modes: usize,
    matrix: CMat,
}

fn check_modes(n: usize) -> Result<()> {
    if n == 0 || n > MAX_MODES {
        return Err(Error::TooManyModes(n));
    }
    Ok(())
}

impl FockState {
    /// Wraps amplitudes of length `2^n_modes`; normalization is not enforced.
    pub fn from_amplitudes(n_modes: usize, amps: CVec) -> Result<Self> {
        check_modes(n_modes)?;
        if amps.len() != 1 << n_modes {
            return Err(Error::DimensionMismatch { expected: 1 << n_modes, got: amps.len() });
        }
        Ok(Self { n_modes, amps })
    }

    /// Basis state with the given occupations.
    pub fn basis(occupations: &[u8]) -> Result<Self> {
        let n = occupations.len();
        check_modes(n)?;
        let idx = occupations.iter().enumerate().fold(0usize, |acc, (j, &b)| acc | (usize::from(b & 1) << j));
        let mut amps = CVec::zeros(1 << n);
        amps[idx] = ONE;
        Ok(Self { n_modes: n, amps })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// Unit-norm copy.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NotNormalized { norm: n });
        }
        Ok(Self { n_modes: self.n_modes, amps: self.amps.unscale(n) })
    }

    /// `<self| op |self>`.
    pub fn expectation(&self, op: &ManyBodyOperator) -> C64 {
        self.amps.dotc(&(op.matrix() * &self.amps))
    }

    /// `op |self>` (no normalization).
    pub fn apply(&self, op: &ManyBodyOperator) -> Result<Self> {
        if op.n_modes != self.n_modes {
            return Err(Error::DimensionMismatch { expected: self.n_modes, got: op.n_modes });
        }
        Ok(Self { n_modes: self.n_modes, amps: op.matrix() * &self.amps })
    }
}

impl ManyBodyOperator {
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn from_matrix(n_modes: usize, matrix: CMat) -> Result<Self> {
        check_modes(n_modes)?;
        if matrix.nrows() != 1 << n_modes || matrix.ncols() != 1 << n_modes {
            return Err(Error::DimensionMismatch { expected: 1 << n_modes, got: matrix.nrows() });
        }
        Ok(Self { n_modes, matrix })
    }

    pub fn identity(n_modes: usize) -> Result<Self> {
        check_modes(n_modes)?;
        Ok(Self { n_modes, matrix: CMat::identity(1 << n_modes, 1 << n_modes) })
    }

    pub fn adjoint(&self) -> Self {
        Self { n_modes: self.n_modes, matrix: self.matrix.adjoint() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self { n_modes: self.n_modes, matrix: &self.matrix * &other.matrix }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { n_modes: self.n_modes, matrix: &self.matrix + &other.matrix }
    }

    pub fn scale(&self, z: C64) -> Self {
        Self { n_modes: self.n_modes, matrix: &self.matrix * z }
    }

    /// `exp(self)`.
    pub fn exp(&self) -> Self {
        Self { n_modes: self.n_modes, matrix: expm(&self.matrix) }
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }
}

/// Annihilation operator `c_i` on `n_modes` modes.
pub fn mode_operator(n_modes: usize, i: usize) -> Result<ManyBodyOperator> {
    check_modes(n_modes)?;
    if i >= n_modes {
        return Err(Error::IndexOutOfRange { index: i, len: n_modes });
    }
    let dim = 1usize << n_modes;
    let mut m = CMat::zeros(dim, dim);
    for s in 0..dim {
        if s >> i & 1 == 1 {
            let sign = if (s & ((1 << i) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            m[(s ^ (1 << i), s)] = C64::new(sign, 0.0);
        }
    }
    Ok(ManyBodyOperator { n_modes, matrix: m })
}

/// All annihilation operators `c_0, ..., c_{n-1}`.
pub fn mode_operators(n_modes: usize) -> Result<Vec<ManyBodyOperator>> {
    (0..n_modes).map(|i| mode_operator(n_modes, i)).collect()
}

/// Majorana operators `γ_{2i} = c_i + c_i^†`, `γ_{2i+1} = i(c_i^† − c_i)`.
pub fn majorana_operators(n_modes: usize) -> Result<Vec<ManyBodyOperator>> {
    let mut out = Vec::with_capacity(2 * n_modes);
    for c in mode_operators(n_modes)? {
        let cd = c.adjoint();
        out.push(c.add(&cd));
        out.push(cd.add(&c.scale(-ONE)).scale(I));
    }
    Ok(out)
}

/// Quadratic form `Σ_ij M_ij c_i^† c_j`.
pub fn quadratic_hamiltonian(m: &CMat) -> Result<ManyBodyOperator> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: m.ncols() });
    }
    check_modes(n)?;
    let dim = 1usize << n;
    let mut h = CMat::zeros(dim, dim);
    // Matrix elements of c_i^† c_j directly on basis states.
    for s in 0..dim {
        for j in 0..n {
            if s >> j & 1 == 0 {
                continue;
            }
            let s1 = s ^ (1 << j);
            let sign_j = (s & ((1 << j) - 1)).count_ones();
            for i in 0..n {
                let mij = m[(i, j)];
                if mij == ZERO || s1 >> i & 1 == 1 {
                    continue;
                }
                let sign_i = (s1 & ((1 << i) - 1)).count_ones();
                let sign = if (sign_i + sign_j) % 2 == 0 { 1.0 } else { -1.0 };
                h[(s1 | (1 << i), s)] += mij * sign;
            }
        }
    }
    Ok(ManyBodyOperator { n_modes: n, matrix: h })
}

/// Applies `exp(−Σ_ij M_ij c_i^† c_j)` to `state` (no normalization).
pub fn evolve_gaussian(state: &FockState, m: &CMat) -> Result<FockState> {
    if m.nrows() != state.n_modes {
        return Err(Error::DimensionMismatch { expected: state.n_modes, got: m.nrows() });
    }
    let k = quadratic_hamiltonian(&(-m))?.exp();
    state.apply(&k)
}

/// `G_ij = <ψ| c_i^† c_j |ψ>` of a normalized state.
pub fn correlation_of(state: &FockState) -> Result<CorrelationMatrix> {
    let n = state.n_modes;
    let cs = mode_operators(n)?;
    let vs: Vec<CVec> = cs.iter().map(|c| c.matrix() * state.amplitudes()).collect();
    let g = CMat::from_fn(n, n, |i, j| vs[i].dotc(&vs[j]));
    CorrelationMatrix::from_matrix(g)
}

/// Occupation `<ψ| χ^† χ |ψ>` of `χ = Σ_i w_i c_i`.
pub fn mode_occupation(state: &FockState, w: &CVec) -> Result<f64> {
    let n = state.n_modes;
    let mut chi = CVec::zeros(1 << n);
    for (i, c) in mode_operators(n)?.iter().enumerate() {
        chi += (c.matrix() * state.amplitudes()) * w[i];
    }
    Ok(chi.norm_squared())
}

/// Number operator `χ^† χ` of `χ = Σ_i w_i c_i`.
pub fn mode_number(n_modes: usize, w: &CVec) -> Result<ManyBodyOperator> {
    let m = CMat::from_fn(n_modes, n_modes, |i, j| w[i].conj() * w[j]);
    quadratic_hamiltonian(&m)
}

/// Checks `{c_i, c_j^†} = δ_ij` and `{c_i, c_j} = 0`; returns the largest residual.
pub fn car_residual(n_modes: usize) -> Result<f64> {
    let cs = mode_operators(n_modes)?;
    let id = CMat::identity(1 << n_modes, 1 << n_modes);
    let mut worst = 0.0f64;
    for (i, ci) in cs.iter().enumerate() {
        for (j, cj) in cs.iter().enumerate() {
            let cjd = cj.adjoint();
            let anti = ci.mul(&cjd).add(&cjd.mul(ci));
            let target = if i == j { id.clone() } else { CMat::zeros(id.nrows(), id.ncols()) };
            worst = worst.max(max_diff(anti.matrix(), &target));
            let anti2 = ci.mul(cj).add(&cj.mul(ci));
            worst = worst.max(max_diff(anti2.matrix(), &CMat::zeros(id.nrows(), id.ncols())));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    #[test]
    fn single_mode_operator() {
        let c = mode_operator(1, 0).unwrap();
        assert_eq!(c.matrix(), &CMat::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]));
    }

    #[test]
    fn anticommutation() {
        for n in 1..=4 {
            assert_eq!(car_residual(n).unwrap(), 0.0);
        }
        assert!(mode_operator(2, 2).is_err());
        assert!(mode_operator(11, 0).is_err());
    }

    #[test]
    fn number_operator_is_diagonal_01() {
        let c = mode_operator(3, 2).unwrap();
        let n = c.adjoint().mul(&c);
        for i in 0..8 {
            for j in 0..8 {
                let z = n.matrix()[(i, j)];
                if i == j {
                    assert!(z == ZERO || z == ONE);
                } else {
                    assert_eq!(z, ZERO);
                }
            }
        }
    }

    #[test]
    fn evolve_examples() {
        let s = FockState::basis(&[1, 0]).unwrap();
        let same = evolve_gaussian(&s, &CMat::zeros(2, 2)).unwrap();
        assert!((same.amplitudes() - s.amplitudes()).norm() < 1e-15);
        let theta = 0.3;
        let m = CMat::from_diagonal(&CVec::from_vec(vec![I * theta, ZERO]));
        let out = evolve_gaussian(&s, &m).unwrap();
        assert!((out.amplitudes()[1] - C64::from_polar(1.0, -theta)).norm() < 1e-14);
    }

    #[test]
    fn correlation_examples() {
        let g = correlation_of(&FockState::basis(&[1, 0]).unwrap()).unwrap();
        assert_eq!(g.matrix(), &CMat::from_diagonal(&CVec::from_vec(vec![ONE, ZERO])));
        let g = correlation_of(&FockState::basis(&[1, 1]).unwrap()).unwrap();
        assert_eq!(g.matrix(), &CMat::identity(2, 2));
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let amps = CVec::from_vec(vec![ZERO, C64::new(r, 0.0), C64::new(r, 0.0), ZERO]);
        let g = correlation_of(&FockState::from_amplitudes(2, amps).unwrap()).unwrap();
        assert!(max_abs(&(g.matrix() - CMat::from_element(2, 2, C64::new(0.5, 0.0)))) < 1e-15);
    }

    #[test]
    fn quadratic_hamiltonian_matches_products() {
        let m = CMat::from_fn(3, 3, |i, j| C64::new(i as f64 + 0.5, j as f64 - 1.0));
        let cs = mode_operators(3).unwrap();
        let mut direct = CMat::zeros(8, 8);
        for i in 0..3 {
            for j in 0..3 {
                direct += cs[i].adjoint().mul(&cs[j]).matrix() * m[(i, j)];
            }
        }
        assert!(max_diff(quadratic_hamiltonian(&m).unwrap().matrix(), &direct) < 1e-14);
    }
}
