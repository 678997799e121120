//! Two-band Chern-insulator model on an `L × L` periodic square lattice.
//!
//! Bloch vector `n(k) = (sin kx, sin ky, α − cos kx − cos ky)`, band projectors
//! `P_±(k) = (1 ± n̂·σ)/2`, and overcomplete Wannier (OW) modes obtained by
//! band-projecting the local orbitals `τ_A = (1, 1)/√2`, `τ_B = (1, −1)/√2`.
//!
//! Mode `(x, y, μ)` has flat index `2 (y L + x) + μ`; momenta live on the grid
//! `k = 2π (m, n) / L`. A mode centered at `r` has amplitudes
//! `w(r', μ) ∝ Σ_k e^{i k·(r − r')} (τ^† P_±(k))_μ`.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{CorrelationMatrix, ModeVector};
use crate::linalg::{singular_values, CMat, CVec, C64, I, ONE, ZERO};

/// Threshold on `|n(k)|` below which the gap is considered closed.
pub const GAP_TOL: f64 = 1e-12;
/// Distance of `α` from `{0, ±2}` below which a localization warning is issued.
pub const ALPHA_WARN_TOL: f64 = 1e-6;
/// Threshold on `|f|` for accepting a form-factor zero.
pub const ZERO_TOL: f64 = 1e-6;
/// Singular-value threshold of [`overcomplete_rank`].
pub const RANK_TOL: f64 = 1e-8;

pub type Mat2 = Matrix2<C64>;

/// Periodic square lattice with two orbitals per unit cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    pub l: usize,
}

impl Lattice {
    pub fn new(l: usize) -> Result<Self> {
        if l < 2 {
            return Err(Error::Invalid(format!("lattice size {l} < 2")));
        }
        Ok(Self { l })
    }

    pub fn n_sites(&self) -> usize {
        self.l * self.l
    }

    pub fn n_modes(&self) -> usize {
        2 * self.l * self.l
    }

    /// Flat index of orbital `mu` at site `(x, y)`.
    pub fn index(&self, x: usize, y: usize, mu: usize) -> usize {
        2 * (y * self.l + x) + mu
    }

    /// Inverse of [`Lattice::index`].
    pub fn coords(&self, i: usize) -> (usize, usize, usize) {
        let site = i / 2;
        (site % self.l, site / self.l, i % 2)
    }

    /// Site index `y L + x`.
    pub fn site(&self, x: usize, y: usize) -> usize {
        y * self.l + x
    }

    /// Minimal-image displacement in `(−L/2, L/2]`.
    pub fn min_image(&self, d: isize) -> isize {
        let l = self.l as isize;
        let mut d = d.rem_euclid(l);
        if d > l / 2 {
            d -= l;
        }
        d
    }

    /// Momentum `2π m / L`.
    pub fn momentum(&self, m: usize) -> f64 {
        2.0 * PI * m as f64 / self.l as f64
    }

    /// Grid momenta in row-major `(m, n)` order, `kx` fastest.
    pub fn momenta(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.n_sites());
        for n in 0..self.l {
            for m in 0..self.l {
                out.push((self.momentum(m), self.momentum(n)));
            }
        }
        out
    }

    /// Both orbital indices of every site in `sites`.
    pub fn modes_of_sites(&self, sites: &[(usize, usize)]) -> Vec<usize> {
        sites.iter().flat_map(|&(x, y)| [self.index(x, y, 0), self.index(x, y, 1)]).collect()
    }
}

/// Per-unit-cell `α` values, indexed by site `y L + x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaField {
    pub l: usize,
    pub values: Vec<f64>,
}

impl AlphaField {
    pub fn uniform(l: usize, alpha: f64) -> Self {
        Self { l, values: vec![alpha; l * l] }
    }

    /// `inner` on rows `y ∈ [L/4, 3L/4)`, `outer` elsewhere.
    pub fn domain_wall(l: usize, inner: f64, outer: f64) -> Self {
        let mut values = vec![outer; l * l];
        for y in l / 4..3 * l / 4 {
            for x in 0..l {
                values[y * l + x] = inner;
            }
        }
        Self { l, values }
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.l + x]
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.l * self.l {
            return Err(Error::DimensionMismatch { expected: self.l * self.l, got: self.values.len() });
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("non-finite alpha {v}")));
        }
        Ok(())
    }

    /// Distinct values in first-seen order.
    pub fn distinct(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for &v in &self.values {
            if !out.iter().any(|&u| u.to_bits() == v.to_bits()) {
                out.push(v);
            }
        }
        out
    }
}

/// Local orbital `τ_ν`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orbital {
    A,
    B,
}

impl Orbital {
    pub const ALL: [Orbital; 2] = [Orbital::A, Orbital::B];

    pub fn index(self) -> usize {
        match self {
            Orbital::A => 0,
            Orbital::B => 1,
        }
    }

    /// `τ_A = (1, 1)/√2`, `τ_B = (1, −1)/√2`.
    pub fn tau(self) -> [C64; 2] {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Orbital::A => [C64::new(r, 0.0), C64::new(r, 0.0)],
            Orbital::B => [C64::new(r, 0.0), C64::new(-r, 0.0)],
        }
    }
}

/// Upper (`+`) or lower (`−`) band.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Band {
    Lower,
    Upper,
}

impl Band {
    pub const ALL: [Band; 2] = [Band::Lower, Band::Upper];

    pub fn sign(self) -> f64 {
        match self {
            Band::Lower => -1.0,
            Band::Upper => 1.0,
        }
    }

    /// Stabilizer target occupation: 1 for the lower band, 0 for the upper.
    pub fn target(self) -> u8 {
        match self {
            Band::Lower => 1,
            Band::Upper => 0,
        }
    }
}

/// `n(k) = (sin kx, sin ky, α − cos kx − cos ky)`.
pub fn bloch_vector(kx: f64, ky: f64, alpha: f64) -> [f64; 3] {
    [kx.sin(), ky.sin(), alpha - kx.cos() - ky.cos()]
}

/// True if `α` lies within [`ALPHA_WARN_TOL`] of a gap closing `{0, ±2}`.
pub fn near_gapless(alpha: f64) -> bool {
    [0.0, 2.0, -2.0].iter().any(|&a| (alpha - a).abs() < ALPHA_WARN_TOL)
}

fn pauli_dot(n: [f64; 3]) -> Mat2 {
    Mat2::new(C64::new(n[2], 0.0), C64::new(n[0], -n[1]), C64::new(n[0], n[1]), C64::new(-n[2], 0.0))
}

/// `(P_+, P_−)` at `k`; errors at a gap closing.
pub fn band_projectors(kx: f64, ky: f64, alpha: f64) -> Result<(Mat2, Mat2)> {
    let n = bloch_vector(kx, ky, alpha);
    let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if norm < GAP_TOL {
        return Err(Error::GapClosed { kx, ky, alpha });
    }
    let h = pauli_dot([n[0] / norm, n[1] / norm, n[2] / norm]) * C64::new(0.5, 0.0);
    let half = Mat2::identity() * C64::new(0.5, 0.0);
    Ok((half + h, half - h))
}

/// Projector of `band`, or `1/2` at a gap closing (used for OW construction only).
fn projector_or_half(kx: f64, ky: f64, alpha: f64, band: Band) -> (Mat2, bool) {
    match band_projectors(kx, ky, alpha) {
        Ok((p, m)) => (if band == Band::Upper { p } else { m }, false),
        Err(_) => (Mat2::identity() * C64::new(0.5, 0.0), true),
    }
}

/// `τ^† P_n(k) τ`.
pub fn orbital_weight(kx: f64, ky: f64, alpha: f64, orbital: Orbital, band: Band) -> Result<f64> {
    let (pp, pm) = band_projectors(kx, ky, alpha)?;
    let p = if band == Band::Upper { pp } else { pm };
    let t = orbital.tau();
    let mut acc = ZERO;
    for a in 0..2 {
        for b in 0..2 {
            acc += t[a].conj() * p[(a, b)] * t[b];
        }
    }
    Ok(acc.re)
}

/// Grid normalization `Z_{ν,n} = (1/L²) Σ_k τ^† P_n(k) τ`.
pub fn form_factor_norm(lattice: &Lattice, alpha: f64, orbital: Orbital, band: Band) -> Result<f64> {
    let ks = lattice.momenta();
    let mut z = 0.0;
    for &(kx, ky) in &ks {
        z += orbital_weight(kx, ky, alpha, orbital, band)?;
    }
    Ok(z / ks.len() as f64)
}

/// `|f_{ν,n}(k)|² = τ^† P_n(k) τ / Z_{ν,n}`.
pub fn form_factor_sq(kx: f64, ky: f64, alpha: f64, orbital: Orbital, band: Band, z: f64) -> Result<f64> {
    Ok(orbital_weight(kx, ky, alpha, orbital, band)? / z)
}

/// `f_{ν,n}(k) = <ψ_n(k)|τ_ν> / √Z` in the gauge `ψ_n ∝ P_n e_j`, `j = argmax_j (P_n)_jj`.
pub fn form_factor(kx: f64, ky: f64, alpha: f64, orbital: Orbital, band: Band, z: f64) -> Result<C64> {
    let (pp, pm) = band_projectors(kx, ky, alpha)?;
    let p = if band == Band::Upper { pp } else { pm };
    let j = if p[(0, 0)].re >= p[(1, 1)].re { 0 } else { 1 };
    let norm = p[(j, j)].re.sqrt();
    let psi = [p[(0, j)] / norm, p[(1, j)] / norm];
    let t = orbital.tau();
    Ok((psi[0].conj() * t[0] + psi[1].conj() * t[1]) / z.sqrt())
}

/// Residual `n̂(k) ± s_ν` whose zero is a zero of `f_{ν,±}`, with `s_ν = τ^† σ τ`.
fn zero_residual(k: [f64; 2], alpha: f64, orbital: Orbital, band: Band) -> [f64; 3] {
    let n = bloch_vector(k[0], k[1], alpha);
    let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt().max(GAP_TOL);
    let s = match orbital {
        Orbital::A => [1.0, 0.0, 0.0],
        Orbital::B => [-1.0, 0.0, 0.0],
    };
    // τ^† P_± τ = |n̂ ± s|² / 4.
    let sg = band.sign();
    [n[0] / norm + sg * s[0], n[1] / norm + sg * s[1], n[2] / norm + sg * s[2]]
}

/// Momenta where `f_{ν,n}` vanishes, located from grid minima of `|f|` and refined
/// by a quadratic fit followed by Gauss–Newton; accepted when `|f| < 1e-6`.
pub fn form_factor_zeros(lattice: &Lattice, orbital: Orbital, band: Band, alpha: f64) -> Result<Vec<(f64, f64)>> {
    let l = lattice.l;
    let z = form_factor_norm(lattice, alpha, orbital, band)?;
    let mut grid = vec![0.0; l * l];
    for n in 0..l {
        for m in 0..l {
            grid[n * l + m] = orbital_weight(lattice.momentum(m), lattice.momentum(n), alpha, orbital, band)? / z;
        }
    }
    let at = |m: isize, n: isize| grid[(n.rem_euclid(l as isize) as usize) * l + m.rem_euclid(l as isize) as usize];
    let h = 2.0 * PI / l as f64;
    let mut zeros: Vec<(f64, f64)> = Vec::new();
    for n in 0..l as isize {
        for m in 0..l as isize {
            let c = at(m, n);
            let is_min = (-1..=1).all(|dn| (-1..=1).all(|dm| (dm == 0 && dn == 0) || at(m + dm, n + dn) >= c));
            if !is_min {
                continue;
            }
            // Quadratic fit of |f|² on the 3×3 stencil for the starting point.
            let gx = (at(m + 1, n) - at(m - 1, n)) / 2.0;
            let gy = (at(m, n + 1) - at(m, n - 1)) / 2.0;
            let hxx = at(m + 1, n) - 2.0 * c + at(m - 1, n);
            let hyy = at(m, n + 1) - 2.0 * c + at(m, n - 1);
            let hxy = (at(m + 1, n + 1) - at(m + 1, n - 1) - at(m - 1, n + 1) + at(m - 1, n - 1)) / 4.0;
            let det = hxx * hyy - hxy * hxy;
            let (mut dx, mut dy) = (0.0, 0.0);
            if det > 0.0 && hxx > 0.0 {
                dx = (-(hyy * gx) + hxy * gy) / det;
                dy = (hxy * gx - hxx * gy) / det;
                dx = dx.clamp(-1.0, 1.0);
                dy = dy.clamp(-1.0, 1.0);
            }
            let mut k = [(m as f64 + dx) * h, (n as f64 + dy) * h];
            k = gauss_newton(k, alpha, orbital, band);
            let kx = k[0].rem_euclid(2.0 * PI);
            let ky = k[1].rem_euclid(2.0 * PI);
            let f = match form_factor_sq(kx, ky, alpha, orbital, band, z) {
                Ok(v) => v.max(0.0).sqrt(),
                Err(_) => continue,
            };
            let fr = zero_residual([kx, ky], alpha, orbital, band);
            let f_res = ((fr[0] * fr[0] + fr[1] * fr[1] + fr[2] * fr[2]) / (4.0 * z)).sqrt();
            if f.min(f_res) < ZERO_TOL {
                let dup = zeros.iter().any(|&(a, b)| periodic_dist(a, kx) < 1e-6 && periodic_dist(b, ky) < 1e-6);
                if !dup {
                    zeros.push((kx, ky));
                }
            }
        }
    }
    Ok(zeros)
}

fn periodic_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

fn gauss_newton(mut k: [f64; 2], alpha: f64, orbital: Orbital, band: Band) -> [f64; 2] {
    let eps = 1e-7;
    for _ in 0..100 {
        let r = zero_residual(k, alpha, orbital, band);
        let rx = zero_residual([k[0] + eps, k[1]], alpha, orbital, band);
        let ry = zero_residual([k[0], k[1] + eps], alpha, orbital, band);
        let jx: Vec<f64> = (0..3).map(|i| (rx[i] - r[i]) / eps).collect();
        let jy: Vec<f64> = (0..3).map(|i| (ry[i] - r[i]) / eps).collect();
        let a11: f64 = jx.iter().map(|v| v * v).sum();
        let a22: f64 = jy.iter().map(|v| v * v).sum();
        let a12: f64 = jx.iter().zip(&jy).map(|(a, b)| a * b).sum();
        let b1: f64 = jx.iter().zip(&r).map(|(a, b)| a * b).sum();
        let b2: f64 = jy.iter().zip(&r).map(|(a, b)| a * b).sum();
        let det = a11 * a22 - a12 * a12;
        if det.abs() < 1e-300 {
            break;
        }
        let dx = -(a22 * b1 - a12 * b2) / det;
        let dy = -(a11 * b2 - a12 * b1) / det;
        let step = (dx * dx + dy * dy).sqrt();
        let scale = if step > 0.5 { 0.5 / step } else { 1.0 };
        k = [k[0] + scale * dx, k[1] + scale * dy];
        if step < 1e-14 {
            break;
        }
    }
    k
}

/// Real-space kernel `K_μ(d) = Σ_k e^{i k·d} (τ^† P_n(k))_μ` on all displacements,
/// indexed by `2 (dy L + dx) + μ`, normalized to unit norm.
#[derive(Clone, Debug)]
pub struct OwKernel {
    pub lattice: Lattice,
    pub alpha: f64,
    pub orbital: Orbital,
    pub band: Band,
    /// True if some grid momentum is gapless and `P = 1/2` was substituted there.
    pub gapless: bool,
    values: Vec<C64>,
}

impl OwKernel {
    pub fn new(lattice: Lattice, alpha: f64, orbital: Orbital, band: Band) -> Self {
        let l = lattice.l;
        let t = orbital.tau();
        let mut gapless = false;
        // a_μ(k) = Σ_ρ conj(τ_ρ) P_{ρμ}(k)
        let mut a = Vec::with_capacity(l * l);
        for &(kx, ky) in &lattice.momenta() {
            let (p, g) = projector_or_half(kx, ky, alpha, band);
            gapless |= g;
            a.push([
                t[0].conj() * p[(0, 0)] + t[1].conj() * p[(1, 0)],
                t[0].conj() * p[(0, 1)] + t[1].conj() * p[(1, 1)],
            ]);
        }
        // Separable DFT: phase tables e^{2πi m d / L}.
        let phase: Vec<C64> = (0..l).map(|j| C64::from_polar(1.0, 2.0 * PI * j as f64 / l as f64)).collect();
        let mut partial = vec![[ZERO; 2]; l * l]; // (n, dx)
        for n in 0..l {
            for dx in 0..l {
                let mut acc = [ZERO; 2];
                for m in 0..l {
                    let ph = phase[(m * dx) % l];
                    let am = a[n * l + m];
                    acc[0] += ph * am[0];
                    acc[1] += ph * am[1];
                }
                partial[n * l + dx] = acc;
            }
        }
        let mut values = vec![ZERO; 2 * l * l];
        for dy in 0..l {
            for dx in 0..l {
                let mut acc = [ZERO; 2];
                for n in 0..l {
                    let ph = phase[(n * dy) % l];
                    let p = partial[n * l + dx];
                    acc[0] += ph * p[0];
                    acc[1] += ph * p[1];
                }
                values[2 * (dy * l + dx)] = acc[0];
                values[2 * (dy * l + dx) + 1] = acc[1];
            }
        }
        let norm = values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut values {
                *v /= norm;
            }
        }
        Self { lattice, alpha, orbital, band, gapless, values }
    }

    /// `K_μ(d)` for `d` taken modulo `L`.
    pub fn at(&self, dx: isize, dy: isize, mu: usize) -> C64 {
        let l = self.lattice.l as isize;
        let (dx, dy) = (dx.rem_euclid(l) as usize, dy.rem_euclid(l) as usize);
        self.values[2 * (dy * self.lattice.l + dx) + mu]
    }

    /// Mode centered at `(x, y)`, truncated to `|d_x|, |d_y| ≤ shell` when given.
    pub fn mode_at(&self, x: usize, y: usize, shell: Option<usize>) -> Result<ModeVector> {
        let lat = self.lattice;
        let l = lat.l as isize;
        let shell = shell.filter(|&s| 2 * s + 1 < lat.l);
        let mut entries = Vec::new();
        match shell {
            None => {
                for yp in 0..lat.l {
                    for xp in 0..lat.l {
                        for mu in 0..2 {
                            let v = self.at(x as isize - xp as isize, y as isize - yp as isize, mu);
                            entries.push((lat.index(xp, yp, mu), v));
                        }
                    }
                }
            }
            Some(s) => {
                let s = s as isize;
                for dy in -s..=s {
                    for dx in -s..=s {
                        let xp = (x as isize + dx).rem_euclid(l) as usize;
                        let yp = (y as isize + dy).rem_euclid(l) as usize;
                        for mu in 0..2 {
                            entries.push((lat.index(xp, yp, mu), self.at(-dx, -dy, mu)));
                        }
                    }
                }
            }
        }
        let mut amps = CVec::zeros(lat.n_modes());
        for (i, v) in entries {
            amps[i] = v;
        }
        ModeVector::normalized(amps)
    }
}

/// One OW mode with its labels.
#[derive(Clone, Debug)]
pub struct OwMode {
    pub x: usize,
    pub y: usize,
    pub orbital: Orbital,
    pub band: Band,
    pub shell: Option<usize>,
    pub mode: ModeVector,
}

/// All `4 L²` OW modes, ordered by site (row-major), then orbital, then band
/// (lower before upper).
#[derive(Clone, Debug)]
pub struct OwModeSet {
    pub lattice: Lattice,
    pub shell: Option<usize>,
    /// True if any kernel substituted `P = 1/2` at a gapless momentum.
    pub gapless: bool,
    pub modes: Vec<OwMode>,
}

impl OwModeSet {
    /// Builds every mode using the local `α` at its center.
    pub fn build(lattice: Lattice, alpha: &AlphaField, shell: Option<usize>) -> Result<Self> {
        alpha.validate()?;
        if alpha.l != lattice.l {
            return Err(Error::DimensionMismatch { expected: lattice.l, got: alpha.l });
        }
        let mut kernels: HashMap<(u64, Orbital, Band), OwKernel> = HashMap::new();
        for a in alpha.distinct() {
            for o in Orbital::ALL {
                for b in Band::ALL {
                    kernels.insert((a.to_bits(), o, b), OwKernel::new(lattice, a, o, b));
                }
            }
        }
        let gapless = kernels.values().any(|k| k.gapless);
        let mut modes = Vec::with_capacity(4 * lattice.n_sites());
        for y in 0..lattice.l {
            for x in 0..lattice.l {
                let a = alpha.at(x, y).to_bits();
                for o in Orbital::ALL {
                    for b in Band::ALL {
                        let mode = kernels[&(a, o, b)].mode_at(x, y, shell)?;
                        modes.push(OwMode { x, y, orbital: o, band: b, shell, mode });
                    }
                }
            }
        }
        Ok(Self { lattice, shell, gapless, modes })
    }

    /// Uniform-`α` set.
    pub fn uniform(lattice: Lattice, alpha: f64, shell: Option<usize>) -> Result<Self> {
        Self::build(lattice, &AlphaField::uniform(lattice.l, alpha), shell)
    }

    /// Mode at `(x, y, ν, band)`.
    pub fn get(&self, x: usize, y: usize, orbital: Orbital, band: Band) -> &OwMode {
        let i = ((self.lattice.site(x, y) * 2 + orbital.index()) * 2) + usize::from(band == Band::Upper);
        &self.modes[i]
    }

    /// Serializable sparse form.
    pub fn to_records(&self) -> Vec<OwModeRecord> {
        self.modes
            .iter()
            .map(|m| OwModeRecord {
                x: m.x,
                y: m.y,
                orbital: m.orbital,
                band: m.band,
                shell: m.shell,
                amplitudes: m.mode.support().iter().map(|&i| (i, m.mode.amps()[i].re, m.mode.amps()[i].im)).collect(),
            })
            .collect()
    }

    /// Rebuilds a set from records written by [`OwModeSet::to_records`].
    pub fn from_records(lattice: Lattice, records: &[OwModeRecord]) -> Result<Self> {
        if records.len() != 4 * lattice.n_sites() {
            return Err(Error::DimensionMismatch { expected: 4 * lattice.n_sites(), got: records.len() });
        }
        let mut modes = Vec::with_capacity(records.len());
        for r in records {
            let entries: Vec<(usize, C64)> = r.amplitudes.iter().map(|&(i, re, im)| (i, C64::new(re, im))).collect();
            modes.push(OwMode {
                x: r.x,
                y: r.y,
                orbital: r.orbital,
                band: r.band,
                shell: r.shell,
                mode: ModeVector::from_sparse(lattice.n_modes(), &entries)?,
            });
        }
        let shell = records[0].shell;
        Ok(Self { lattice, shell, gapless: false, modes })
    }
}

/// JSON record of one OW mode: `amplitudes` lists `(flat index, re, im)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OwModeRecord {
    pub x: usize,
    pub y: usize,
    pub orbital: Orbital,
    pub band: Band,
    pub shell: Option<usize>,
    pub amplitudes: Vec<(usize, f64, f64)>,
}

/// Builds a single OW mode.
pub fn build_ow_mode(lattice: Lattice, alpha: f64, x: usize, y: usize, orbital: Orbital, band: Band) -> Result<OwMode> {
    let k = OwKernel::new(lattice, alpha, orbital, band);
    Ok(OwMode { x, y, orbital, band, shell: None, mode: k.mode_at(x, y, None)? })
}

/// Truncates to the `(2 shell + 1)²` window around the center and renormalizes;
/// windows at least as wide as the lattice leave the mode unchanged.
pub fn truncate(lattice: Lattice, mode: &OwMode, shell: usize) -> Result<OwMode> {
    if shell == 0 {
        return Err(Error::Invalid("n_shell must be at least 1".into()));
    }
    if 2 * shell + 1 >= lattice.l {
        return Ok(mode.clone());
    }
    let mut amps = CVec::zeros(lattice.n_modes());
    for &i in mode.mode.support() {
        let (xp, yp, _) = lattice.coords(i);
        let dx = lattice.min_image(xp as isize - mode.x as isize);
        let dy = lattice.min_image(yp as isize - mode.y as isize);
        if dx.abs() <= shell as isize && dy.abs() <= shell as isize {
            amps[i] = mode.mode.amps()[i];
        }
    }
    Ok(OwMode { shell: Some(shell), mode: ModeVector::normalized(amps)?, ..mode.clone() })
}

/// Lower-band-filled ground state: `G[(r,μ),(r',ν)] = (1/L²) Σ_k e^{−ik(r−r')} conj(P_−(k))_{μν}`.
pub fn ground_state_correlation(lattice: Lattice, alpha: f64) -> Result<CorrelationMatrix> {
    let l = lattice.l;
    let ks = lattice.momenta();
    let mut pm = Vec::with_capacity(ks.len());
    for &(kx, ky) in &ks {
        pm.push(band_projectors(kx, ky, alpha)?.1);
    }
    // Translation-invariant kernel over displacements d = r − r'.
    let phase: Vec<C64> = (0..l).map(|j| C64::from_polar(1.0, -2.0 * PI * j as f64 / l as f64)).collect();
    let norm = 1.0 / (l * l) as f64;
    let mut kern = vec![Mat2::zeros(); l * l];
    for dy in 0..l {
        for dx in 0..l {
            let mut acc = Mat2::zeros();
            for n in 0..l {
                for m in 0..l {
                    let ph = phase[(m * dx + n * dy) % l];
                    acc += pm[n * l + m].map(|z| z.conj()) * ph;
                }
            }
            kern[dy * l + dx] = acc * C64::new(norm, 0.0);
        }
    }
    let n = lattice.n_modes();
    let g = CMat::from_fn(n, n, |i, j| {
        let (x1, y1, mu) = lattice.coords(i);
        let (x2, y2, nu) = lattice.coords(j);
        let dx = (x1 + l - x2) % l;
        let dy = (y1 + l - y2) % l;
        kern[dy * l + dx][(mu, nu)]
    });
    let mut g = CorrelationMatrix::from_matrix(g)?;
    g.hermitize();
    Ok(g)
}

/// Numerical rank (singular values `> 1e-8`) of the untruncated OW wavefunctions of
/// `band` restricted to `orbitals`.
pub fn overcomplete_rank(modes: &OwModeSet, band: Band, orbitals: &[Orbital]) -> usize {
    let rows: Vec<&OwMode> =
        modes.modes.iter().filter(|m| m.band == band && orbitals.contains(&m.orbital)).collect();
    let n = modes.lattice.n_modes();
    let mat = CMat::from_fn(rows.len(), n, |i, j| rows[i].mode.amps()[j]);
    singular_values(&mat).iter().filter(|&&s| s > RANK_TOL).count()
}

/// Uniform single-orbital hopping matrix of the parent Hamiltonian in real space,
/// `H = Σ_k c^†(k) (n(k)·σ) c(k)`, with the same index convention as `G`.
pub fn parent_hamiltonian(lattice: Lattice, alpha: f64) -> CMat {
    let l = lattice.l;
    let n = lattice.n_modes();
    let half = C64::new(0.5, 0.0);
    // n·σ = sin kx σx + sin ky σy + (α − cos kx − cos ky) σz in real space.
    let sx = Mat2::new(ZERO, ONE, ONE, ZERO);
    let sy = Mat2::new(ZERO, -I, I, ZERO);
    let sz = Mat2::new(ONE, ZERO, ZERO, -ONE);
    let mut h = CMat::zeros(n, n);
    for y in 0..l {
        for x in 0..l {
            for mu in 0..2 {
                for nu in 0..2 {
                    h[(lattice.index(x, y, mu), lattice.index(x, y, nu))] += sz[(mu, nu)] * alpha;
                }
            }
            // c^†_{r+e} T c_r + h.c. with T = (−σz + i σ_e)/2 reproduces sin, cos terms.
            for (ex, ey, s) in [(1usize, 0usize, sx), (0, 1, sy)] {
                let x2 = (x + ex) % l;
                let y2 = (y + ey) % l;
                let t = (-sz + s * I) * half;
                for mu in 0..2 {
                    for nu in 0..2 {
                        let a = lattice.index(x2, y2, mu);
                        let b = lattice.index(x, y, nu);
                        h[(a, b)] += t[(mu, nu)];
                        h[(b, a)] += t[(mu, nu)].conj();
                    }
                }
            }
        }
    }
    h
}
