//! Charge-conserving Gaussian states stored as correlation matrices.
//!
//! Updates are closed-form and low rank:
//! * unitary: `G' = conj(u) G u^T`, where `u` evolves single-particle
//!   wavefunctions (`exp(-Σ M_ij c_i^† c_j)` has `u = exp(-M)`);
//! * projective occupation measurement of `χ = Σ w_i c_i` with `g = G w`,
//!   `p = w^† g`: outcome 1 gives `G - g g^†/p + w w^†`, outcome 0 gives
//!   `G + (w-g)(w-g)^†/(1-p) - w w^†`;
//! * fSWAP of orthonormal `w_a, w_b`: `G' = S G S` with the reflection
//!   `S = 1 - (w_a - w_b)(w_a - w_b)^†`.

use crate::error::{Error, Result};
use crate::linalg::{eigh, eigvalsh, max_abs, max_diff, unitarity_residual, CMat, CVec, C64, ONE, ZERO};
use crate::rng::RandomStream;

/// Index convention of [`CorrelationMatrix`], certified against the Fock oracle.
pub const CONVENTION: &str = "G[i][j] = <c_i^dag c_j>; chi = sum_i w_i c_i; unitary update G' = conj(u) G u^T with u = exp(-M) for exp(-sum M_ij c_i^dag c_j)";

/// Born probabilities closer than this to 0 or 1 yield the certain outcome.
pub const DEGENERATE_P: f64 = 1e-12;
/// Hermiticity tolerance of a valid correlation matrix.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Tolerance on Born probabilities leaving `[0, 1]`.
pub const PROB_TOL: f64 = 1e-9;
/// Norm tolerance of a [`ModeVector`].
pub const NORM_TOL: f64 = 1e-12;
/// Orthogonality tolerance of fSWAP partners.
pub const ORTHO_TOL: f64 = 1e-10;
/// Unitarity tolerance of a [`SingleParticleUnitary`].
pub const UNITARY_TOL: f64 = 1e-12;

/// Normalized single-particle mode `χ = Σ_i w_i c_i` with its support.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeVector {
    amps: CVec,
    support: Vec<usize>,
}

impl ModeVector {
    /// Wraps `amps`, which must have unit norm.
    pub fn new(amps: CVec) -> Result<Self> {
        let norm = amps.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        let support = amps.iter().enumerate().filter(|(_, z)| z.norm() > 0.0).map(|(i, _)| i).collect();
        Ok(Self { amps, support })
    }

    /// Normalizes `amps` first.
    pub fn normalized(amps: CVec) -> Result<Self> {
        let norm = amps.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        Self::new(amps.unscale(norm))
    }

    /// Builds a normalized mode from sparse `(index, amplitude)` entries.
    pub fn from_sparse(dim: usize, entries: &[(usize, C64)]) -> Result<Self> {
        let mut amps = CVec::zeros(dim);
        for &(i, z) in entries {
            if i >= dim {
                return Err(Error::IndexOutOfRange { index: i, len: dim });
            }
            amps[i] += z;
        }
        Self::normalized(amps)
    }

    /// Unit vector on mode `i`.
    pub fn basis(dim: usize, i: usize) -> Result<Self> {
        Self::from_sparse(dim, &[(i, ONE)])
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &CVec {
        &self.amps
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// `<self, other> = Σ conj(self_i) other_i`.
    pub fn inner(&self, other: &ModeVector) -> C64 {
        let (short, long, conj_short) =
            if self.support.len() <= other.support.len() { (self, other, true) } else { (other, self, false) };
        let mut acc = ZERO;
        for &i in &short.support {
            acc += short.amps[i].conj() * long.amps[i];
        }
        if conj_short {
            acc
        } else {
            acc.conj()
        }
    }

    /// Embeds into a larger space at `offset`.
    pub fn embed(&self, dim: usize, offset: usize) -> Result<Self> {
        if offset + self.dim() > dim {
            return Err(Error::DimensionMismatch { expected: dim, got: offset + self.dim() });
        }
        let mut amps = CVec::zeros(dim);
        for &i in &self.support {
            amps[offset + i] = self.amps[i];
        }
        Ok(Self { amps, support: self.support.iter().map(|i| i + offset).collect() })
    }
}

/// Single-particle unitary acting on wavefunctions of the modes in `support`.
#[derive(Clone, Debug)]
pub struct SingleParticleUnitary {
    dim: usize,
    matrix: CMat,
    support: Vec<usize>,
}

impl SingleParticleUnitary {
    /// Unitary on the full space.
    pub fn full(matrix: CMat) -> Result<Self> {
        let dim = matrix.nrows();
        Self::on_support(dim, matrix, (0..dim).collect())
    }

    /// Unitary acting on `support` (in that order), identity elsewhere.
    pub fn on_support(dim: usize, matrix: CMat, support: Vec<usize>) -> Result<Self> {
        if matrix.nrows() != support.len() || matrix.ncols() != support.len() {
            return Err(Error::DimensionMismatch { expected: support.len(), got: matrix.nrows() });
        }
        if let Some(&bad) = support.iter().find(|&&i| i >= dim) {
            return Err(Error::IndexOutOfRange { index: bad, len: dim });
        }
        let residual = unitarity_residual(&matrix);
        if residual > UNITARY_TOL {
            return Err(Error::NotUnitary { residual });
        }
        Ok(Self { dim, matrix, support })
    }

    /// Diagonal phases `u = diag(e^{i φ_j})` on `support`.
    pub fn phases(dim: usize, support: Vec<usize>, phi: &[f64]) -> Result<Self> {
        let m = CMat::from_diagonal(&CVec::from_iterator(phi.len(), phi.iter().map(|&p| C64::from_polar(1.0, p))));
        Self::on_support(dim, m, support)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }
}

/// Outcome of a projective occupation measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Measurement {
    pub outcome: u8,
    /// Born probability of outcome 1 before the update.
    pub born_p: f64,
}

/// Outcome of a weak occupation measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeakMeasurement {
    /// `+1` or `-1`.
    pub outcome: i8,
    /// Probability of the realized outcome.
    pub born_p: f64,
}

/// Correlation matrix `G[i][j] = <c_i^† c_j>` of a Gaussian state.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMatrix {
    g: CMat,
}

impl CorrelationMatrix {
    /// Wraps a Hermitian matrix.
    pub fn from_matrix(g: CMat) -> Result<Self> {
        if g.nrows() != g.ncols() {
            return Err(Error::DimensionMismatch { expected: g.nrows(), got: g.ncols() });
        }
        let residual = max_diff(&g, &g.adjoint());
        if residual > HERMITIAN_TOL {
            return Err(Error::NotHermitian { residual });
        }
        Ok(Self { g })
    }

    /// Product state with `G_ii = occupations[i]`.
    pub fn product_state(dim: usize, occupations: &[u8]) -> Result<Self> {
        if occupations.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: occupations.len() });
        }
        Ok(Self::diagonal(&occupations.iter().map(|&n| f64::from(n.min(1))).collect::<Vec<_>>()))
    }

    /// Diagonal (possibly mixed) state.
    pub fn diagonal(occupations: &[f64]) -> Self {
        let d = CVec::from_iterator(occupations.len(), occupations.iter().map(|&x| C64::new(x, 0.0)));
        Self { g: CMat::from_diagonal(&d) }
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.g
    }

    pub fn into_matrix(self) -> CMat {
        self.g
    }

    fn check_mode(&self, w: &ModeVector) -> Result<()> {
        if w.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: w.dim() });
        }
        Ok(())
    }

    /// `G w`, using the support of `w`.
    pub fn apply_to(&self, w: &ModeVector) -> CVec {
        let n = self.dim();
        let mut out = CVec::zeros(n);
        for &j in w.support() {
            let wj = w.amps()[j];
            let col = self.g.column(j);
            for i in 0..n {
                out[i] += col[i] * wj;
            }
        }
        out
    }

    fn quad(w: &ModeVector, v: &CVec) -> C64 {
        w.support().iter().map(|&i| w.amps()[i].conj() * v[i]).sum()
    }

    /// Occupation `w^† G w` of the mode `χ = Σ w_i c_i`.
    pub fn occupation(&self, w: &ModeVector) -> Result<f64> {
        self.check_mode(w)?;
        Ok(Self::quad(w, &self.apply_to(w)).re)
    }

    /// `G += Σ_t c_t x_t y_t^†` in one pass.
    fn low_rank_update(&mut self, terms: &[(C64, &CVec, &CVec)]) {
        let n = self.dim();
        let ys: Vec<Vec<C64>> = terms.iter().map(|(c, _, y)| y.iter().map(|z| c * z.conj()).collect()).collect();
        for j in 0..n {
            let mut col = self.g.column_mut(j);
            for (t, (_, x, _)) in terms.iter().enumerate() {
                let s = ys[t][j];
                if s == ZERO {
                    continue;
                }
                for i in 0..n {
                    col[i] += x[i] * s;
                }
            }
        }
    }

    /// Applies the single-particle unitary `u`: `G' = conj(u) G u^T` on its support.
    pub fn apply_unitary(&mut self, u: &SingleParticleUnitary) -> Result<()> {
        if u.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: u.dim() });
        }
        let n = self.dim();
        let s = u.support();
        let k = s.len();
        let ubar = u.matrix().map(|z| z.conj());
        // Rows: G[S, :] <- conj(u) G[S, :].
        let mut buf = vec![ZERO; k];
        for j in 0..n {
            for a in 0..k {
                let mut acc = ZERO;
                for b in 0..k {
                    acc += ubar[(a, b)] * self.g[(s[b], j)];
                }
                buf[a] = acc;
            }
            for a in 0..k {
                self.g[(s[a], j)] = buf[a];
            }
        }
        // Columns: G[:, S] <- G[:, S] u^T.
        let um = u.matrix();
        let old: Vec<CVec> = s.iter().map(|&c| self.g.column(c).into_owned()).collect();
        for (a, &ca) in s.iter().enumerate() {
            let mut col = self.g.column_mut(ca);
            for i in 0..n {
                let mut acc = ZERO;
                for b in 0..k {
                    acc += old[b][i] * um[(a, b)];
                }
                col[i] = acc;
            }
        }
        Ok(())
    }

    /// Projects onto occupation `outcome` of `w`; returns the prior Born probability.
    pub fn project(&mut self, w: &ModeVector, outcome: u8) -> Result<f64> {
        self.check_mode(w)?;
        let g = self.apply_to(w);
        let p = Self::quad(w, &g).re;
        if !(-PROB_TOL..=1.0 + PROB_TOL).contains(&p) {
            return Err(Error::CorruptedState { p });
        }
        let wv = w.amps();
        if outcome == 1 {
            if p < DEGENERATE_P {
                return Err(Error::Invalid(format!("outcome 1 has probability {p:.3e}")));
            }
            if 1.0 - p >= DEGENERATE_P {
                self.low_rank_update(&[(C64::new(-1.0 / p, 0.0), &g, &g), (ONE, wv, wv)]);
            }
        } else {
            if 1.0 - p < DEGENERATE_P {
                return Err(Error::Invalid(format!("outcome 0 has probability {:.3e}", 1.0 - p)));
            }
            if p >= DEGENERATE_P {
                let h = wv - &g;
                self.low_rank_update(&[(C64::new(1.0 / (1.0 - p), 0.0), &h, &h), (-ONE, wv, wv)]);
            }
        }
        Ok(p)
    }

    /// Projective occupation measurement of `w`, sampling the outcome from `rng`.
    ///
    /// Consumes exactly one uniform draw. Probabilities within [`DEGENERATE_P`]
    /// of 0 or 1 return the certain outcome without updating.
    pub fn measure(&mut self, w: &ModeVector, rng: &mut RandomStream) -> Result<Measurement> {
        self.check_mode(w)?;
        let u = rng.uniform();
        let p = self.occupation(w)?;
        if !(-PROB_TOL..=1.0 + PROB_TOL).contains(&p) {
            return Err(Error::CorruptedState { p });
        }
        let outcome = if p < DEGENERATE_P {
            0
        } else if 1.0 - p < DEGENERATE_P {
            1
        } else {
            u8::from(u < p)
        };
        self.project(w, outcome)?;
        Ok(Measurement { outcome, born_p: p })
    }

    /// Probability of weak outcome `m` (`±1`) at strength `kappa`.
    pub fn weak_probability(&self, w: &ModeVector, kappa: f64, m: i8) -> Result<f64> {
        if kappa < 0.0 || kappa.is_nan() {
            return Err(Error::NegativeStrength(kappa));
        }
        let p = self.occupation(w)?.clamp(0.0, 1.0);
        let s = f64::from(m) * kappa;
        // (e^{s} p + e^{-s} (1-p)) / (2 cosh κ), written to avoid overflow.
        let num = if s >= 0.0 {
            p + (-2.0 * s).exp() * (1.0 - p)
        } else {
            (2.0 * s).exp() * p + (1.0 - p)
        };
        Ok(num / (1.0 + (-2.0 * kappa).exp()))
    }

    /// Applies the normalized Kraus update `e^{m κ (n - 1/2)}` for outcome `m`.
    pub fn weak_update(&mut self, w: &ModeVector, kappa: f64, m: i8) -> Result<()> {
        if kappa < 0.0 || kappa.is_nan() {
            return Err(Error::NegativeStrength(kappa));
        }
        self.check_mode(w)?;
        if kappa == 0.0 {
            return Ok(());
        }
        let g = self.apply_to(w);
        let p = Self::quad(w, &g).re.clamp(0.0, 1.0);
        let wv = w.amps();
        // m = +1 acts on particles of G; m = -1 acts identically on holes of 1 - G.
        let (q, h, sign) = if m > 0 { (1.0 - p, wv - &g, 1.0) } else { (p, g.clone(), -1.0) };
        let a = (-kappa).exp() - 1.0;
        let delta = (-2.0 * kappa).exp() - 1.0;
        let denom = 1.0 + delta * q;
        if denom < 1e-300 {
            return Err(Error::Invalid("weak outcome has vanishing probability".into()));
        }
        let c = delta / denom;
        let r = 1.0 - c * q;
        let c_hh = C64::new(sign * c, 0.0);
        let c_wh = C64::new(-sign * a * r, 0.0);
        let c_ww = C64::new(-sign * a * a * q * r, 0.0);
        self.low_rank_update(&[(c_hh, &h, &h), (c_wh, wv, &h), (c_wh, &h, wv), (c_ww, wv, wv)]);
        Ok(())
    }

    /// Weak occupation measurement with Kraus operators `e^{m κ (n - 1/2)}`.
    ///
    /// Consumes exactly one uniform draw.
    pub fn measure_weak(&mut self, w: &ModeVector, kappa: f64, rng: &mut RandomStream) -> Result<WeakMeasurement> {
        if kappa < 0.0 || kappa.is_nan() {
            return Err(Error::NegativeStrength(kappa));
        }
        self.check_mode(w)?;
        let u = rng.uniform();
        let p_plus = self.weak_probability(w, kappa, 1)?;
        let outcome: i8 = if p_plus < DEGENERATE_P {
            -1
        } else if 1.0 - p_plus < DEGENERATE_P {
            1
        } else if u < p_plus {
            1
        } else {
            -1
        };
        let born_p = if outcome > 0 { p_plus } else { 1.0 - p_plus };
        self.weak_update(w, kappa, outcome)?;
        Ok(WeakMeasurement { outcome, born_p })
    }

    /// fSWAP exchanging the orthonormal modes `w_a` and `w_b`.
    pub fn fswap(&mut self, wa: &ModeVector, wb: &ModeVector) -> Result<()> {
        self.check_mode(wa)?;
        self.check_mode(wb)?;
        let overlap = wa.inner(wb).norm();
        if overlap > ORTHO_TOL {
            return Err(Error::NotOrthogonal { overlap });
        }
        let mut entries: Vec<(usize, C64)> = wa.support().iter().map(|&i| (i, wa.amps()[i])).collect();
        entries.extend(wb.support().iter().map(|&i| (i, -wb.amps()[i])));
        let v = ModeVector::from_sparse(self.dim(), &entries)?;
        let gv = self.apply_to(&v);
        let vgv = Self::quad(&v, &gv).re;
        let vv = v.amps();
        // S = 1 - 2 v v^† with normalized v; S G S.
        self.low_rank_update(&[
            (C64::new(-2.0, 0.0), vv, &gv),
            (C64::new(-2.0, 0.0), &gv, vv),
            (C64::new(4.0 * vgv, 0.0), vv, vv),
        ]);
        Ok(())
    }

    /// Adds `delta · w w^†`, changing the occupation of a decoupled mode by `delta`.
    pub fn add_mode_occupation(&mut self, w: &ModeVector, delta: f64) -> Result<()> {
        self.check_mode(w)?;
        if delta != 0.0 {
            self.low_rank_update(&[(C64::new(delta, 0.0), w.amps(), w.amps())]);
        }
        Ok(())
    }

    /// Conjugates by per-mode phases: `G_ij -> e^{-i φ_i} G_ij e^{i φ_j}`.
    pub fn apply_phases(&mut self, phi: &[f64]) -> Result<()> {
        if phi.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: phi.len() });
        }
        let ph: Vec<C64> = phi.iter().map(|&p| C64::from_polar(1.0, p)).collect();
        let n = self.dim();
        for j in 0..n {
            let mut col = self.g.column_mut(j);
            for i in 0..n {
                col[i] *= ph[i].conj() * ph[j];
            }
        }
        Ok(())
    }

    /// `‖G² − G‖_max`.
    pub fn purity_deviation(&self) -> f64 {
        max_diff(&(&self.g * &self.g), &self.g)
    }

    /// `tr G`.
    pub fn total_charge(&self) -> f64 {
        self.g.trace().re
    }

    /// `‖G − G^†‖_max`.
    pub fn hermiticity_residual(&self) -> f64 {
        max_diff(&self.g, &self.g.adjoint())
    }

    /// Replaces `G` by `(G + G^†)/2`.
    pub fn hermitize(&mut self) {
        let n = self.dim();
        for j in 0..n {
            for i in 0..j {
                let avg = (self.g[(i, j)] + self.g[(j, i)].conj()) * 0.5;
                self.g[(i, j)] = avg;
                self.g[(j, i)] = avg.conj();
            }
            self.g[(j, j)] = C64::new(self.g[(j, j)].re, 0.0);
        }
    }

    /// Hermitizes and clamps the spectrum to `[0, 1]`.
    pub fn clamp_spectrum(&mut self) {
        self.hermitize();
        let (vals, vecs) = eigh(&self.g);
        if vals.iter().all(|&l| (0.0..=1.0).contains(&l)) {
            return;
        }
        let mut scaled = vecs.clone();
        for (j, &l) in vals.iter().enumerate() {
            scaled.column_mut(j).scale_mut(l.clamp(0.0, 1.0));
        }
        self.g = scaled * vecs.adjoint();
        self.hermitize();
    }

    /// Hermitizes and rounds every eigenvalue to 0 or 1 (nearest pure state).
    pub fn purify(&mut self) {
        self.hermitize();
        let (vals, vecs) = eigh(&self.g);
        let mut kept = vecs.clone();
        for (j, &l) in vals.iter().enumerate() {
            kept.column_mut(j).scale_mut(if l > 0.5 { 1.0 } else { 0.0 });
        }
        self.g = kept * vecs.adjoint();
        self.hermitize();
    }

    /// Minimum and maximum eigenvalue.
    pub fn spectrum_range(&self) -> (f64, f64) {
        let v = eigvalsh(&self.g);
        (v.first().copied().unwrap_or(0.0), v.last().copied().unwrap_or(0.0))
    }

    /// Checks the validity invariants: Hermiticity and spectrum in `[-1e-9, 1 + 1e-9]`.
    pub fn validate(&self) -> Result<()> {
        let residual = self.hermiticity_residual();
        if residual > HERMITIAN_TOL {
            return Err(Error::NotHermitian { residual });
        }
        let (lo, hi) = self.spectrum_range();
        if lo < -PROB_TOL || hi > 1.0 + PROB_TOL {
            return Err(Error::CorruptedState { p: if lo < -PROB_TOL { lo } else { hi } });
        }
        Ok(())
    }

    /// Principal submatrix on `modes`.
    pub fn restrict(&self, modes: &[usize]) -> CMat {
        CMat::from_fn(modes.len(), modes.len(), |a, b| self.g[(modes[a], modes[b])])
    }

    /// Largest entry of the off-diagonal block between `a` and `b`.
    pub fn cross_block_max(&self, a: &[usize], b: &[usize]) -> f64 {
        let mut m = 0.0f64;
        for &i in a {
            for &j in b {
                m = m.max(self.g[(i, j)].norm());
            }
        }
        m
    }

    /// `max |G − other|`.
    pub fn distance(&self, other: &CorrelationMatrix) -> f64 {
        max_diff(&self.g, &other.g)
    }

    /// Largest entry magnitude.
    pub fn max_entry(&self) -> f64 {
        max_abs(&self.g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g2(a: [[f64; 2]; 2]) -> CorrelationMatrix {
        CorrelationMatrix::from_matrix(CMat::from_fn(2, 2, |i, j| C64::new(a[i][j], 0.0))).unwrap()
    }

    #[test]
    fn product_state_examples() {
        let g = CorrelationMatrix::product_state(2, &[1, 0]).unwrap();
        assert_eq!(g, g2([[1.0, 0.0], [0.0, 0.0]]));
        let g = CorrelationMatrix::product_state(3, &[0, 1, 1]).unwrap();
        assert_eq!(g.total_charge(), 2.0);
        assert!(CorrelationMatrix::product_state(3, &[0, 1]).is_err());
    }

    #[test]
    fn occupation_examples() {
        let g = g2([[1.0, 0.0], [0.0, 0.0]]);
        assert_eq!(g.occupation(&ModeVector::basis(2, 0).unwrap()).unwrap(), 1.0);
        let w = ModeVector::normalized(CVec::from_vec(vec![ONE, ONE])).unwrap();
        assert!((g.occupation(&w).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn projective_examples() {
        let w = ModeVector::basis(2, 0).unwrap();
        let mut g = g2([[0.5, 0.5], [0.5, 0.5]]);
        let p = g.project(&w, 1).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert!(g.distance(&g2([[1.0, 0.0], [0.0, 0.0]])) < 1e-15);
        let mut g = g2([[0.5, 0.5], [0.5, 0.5]]);
        g.project(&w, 0).unwrap();
        assert!(g.distance(&g2([[0.0, 0.0], [0.0, 1.0]])) < 1e-15);
        let mut g = g2([[1.0, 0.0], [0.0, 0.0]]);
        let mut rng = RandomStream::new(1);
        let m = g.measure(&w, &mut rng).unwrap();
        assert_eq!(m, Measurement { outcome: 1, born_p: 1.0 });
        assert_eq!(g, g2([[1.0, 0.0], [0.0, 0.0]]));
    }

    #[test]
    fn weak_zero_strength_is_identity() {
        let w = ModeVector::basis(2, 0).unwrap();
        let mut g = g2([[0.5, 0.5], [0.5, 0.5]]);
        assert!((g.weak_probability(&w, 0.0, 1).unwrap() - 0.5).abs() < 1e-15);
        g.weak_update(&w, 0.0, 1).unwrap();
        assert_eq!(g, g2([[0.5, 0.5], [0.5, 0.5]]));
        assert!(g.weak_update(&w, -1.0, 1).is_err());
    }

    #[test]
    fn weak_strong_limit_matches_projective() {
        let w = ModeVector::basis(2, 0).unwrap();
        for (m, outcome) in [(1i8, 1u8), (-1, 0)] {
            let mut weak = g2([[0.5, 0.5], [0.5, 0.5]]);
            weak.weak_update(&w, 40.0, m).unwrap();
            let mut proj = g2([[0.5, 0.5], [0.5, 0.5]]);
            proj.project(&w, outcome).unwrap();
            assert!(weak.distance(&proj) < 1e-8);
        }
    }

    #[test]
    fn fswap_examples() {
        let a = ModeVector::basis(2, 0).unwrap();
        let b = ModeVector::basis(2, 1).unwrap();
        let mut g = g2([[1.0, 0.0], [0.0, 0.0]]);
        g.fswap(&a, &b).unwrap();
        assert!(g.distance(&g2([[0.0, 0.0], [0.0, 1.0]])) < 1e-15);
        let mut g = g2([[1.0, 0.0], [0.0, 1.0]]);
        g.fswap(&a, &b).unwrap();
        assert!(g.distance(&g2([[1.0, 0.0], [0.0, 1.0]])) < 1e-15);
        let c = ModeVector::normalized(CVec::from_vec(vec![ONE, ONE])).unwrap();
        assert!(g.fswap(&a, &c).is_err());
    }

    #[test]
    fn purity_and_charge() {
        let g = g2([[1.0, 0.0], [0.0, 0.0]]);
        assert_eq!((g.purity_deviation(), g.total_charge()), (0.0, 1.0));
        let g = g2([[0.5, 0.0], [0.0, 0.5]]);
        assert_eq!((g.purity_deviation(), g.total_charge()), (0.25, 1.0));
    }

    #[test]
    fn swap_unitary_permutes() {
        let mut g = g2([[1.0, 0.0], [0.0, 0.0]]);
        let swap = CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        g.apply_unitary(&SingleParticleUnitary::full(swap).unwrap()).unwrap();
        assert!(g.distance(&g2([[0.0, 0.0], [0.0, 1.0]])) < 1e-15);
    }
}
