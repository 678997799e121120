//! Diagnostics computed from correlation matrices on the physical layer.
//!
//! All entropies are in nats. Site coordinates follow [`crate::chern::Lattice`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::chern::Lattice;
use crate::error::{Error, Result};
use crate::gaussian::CorrelationMatrix;
use crate::linalg::{eigh, eigvalsh, CMat, C64, ZERO};

/// Default triple-region radius as a fraction of `L`.
pub const TRIPLE_RADIUS_FRACTION: f64 = 0.4;
/// Sites this close to the coordinate seam are excluded from the Chern marker.
pub const MARKER_MARGIN: usize = 2;
/// Eigenvalues this close to 1/2 make [`regularize`] undefined.
pub const HALF_TOL: f64 = 1e-9;

/// Three disjoint 120° wedges of a disk around `center`, counterclockwise.
#[derive(Clone, Debug, PartialEq)]
pub struct TripleRegion {
    pub center: (usize, usize),
    pub radius: f64,
    /// Mode indices of regions A, B, C.
    pub regions: [Vec<usize>; 3],
}

impl TripleRegion {
    /// Wedges `[0, 2π/3)`, `[2π/3, 4π/3)`, `[4π/3, 2π)` of the angle of the
    /// minimal-image displacement; the center site belongs to A.
    pub fn new(lattice: &Lattice, center: (usize, usize), radius: f64) -> Result<Self> {
        if radius <= 0.0 || radius >= lattice.l as f64 / 2.0 {
            return Err(Error::RegionTooLarge(format!("radius {radius} for L = {}", lattice.l)));
        }
        let mut regions: [Vec<usize>; 3] = Default::default();
        for y in 0..lattice.l {
            for x in 0..lattice.l {
                let dx = lattice.min_image(x as isize - center.0 as isize) as f64;
                let dy = lattice.min_image(y as isize - center.1 as isize) as f64;
                if dx * dx + dy * dy > radius * radius {
                    continue;
                }
                let theta = dy.atan2(dx).rem_euclid(2.0 * PI);
                let sector = ((theta / (2.0 * PI / 3.0)) as usize).min(2);
                regions[sector].push(lattice.index(x, y, 0));
                regions[sector].push(lattice.index(x, y, 1));
            }
        }
        Ok(Self { center, radius, regions })
    }
}

fn block(g: &CMat, rows: &[usize], cols: &[usize]) -> CMat {
    CMat::from_fn(rows.len(), cols.len(), |i, j| g[(rows[i], cols[j])])
}

/// Complex value `12πi [tr(G P_A G P_B G P_C) − tr(G P_C G P_B G P_A)]`.
pub fn chern_triple_complex(g: &CorrelationMatrix, part: &TripleRegion) -> C64 {
    let m = g.matrix();
    let [a, b, c] = &part.regions;
    let gab = block(m, a, b);
    let gbc = block(m, b, c);
    let gca = block(m, c, a);
    let gac = block(m, a, c);
    let gcb = block(m, c, b);
    let gba = block(m, b, a);
    let t1 = (gab * gbc * gca).trace();
    let t2 = (gac * gcb * gba).trace();
    C64::new(0.0, 12.0 * PI) * (t1 - t2)
}

/// Real-space Chern number for one triple region.
pub fn chern_real_space(g: &CorrelationMatrix, part: &TripleRegion) -> f64 {
    chern_triple_complex(g, part).re
}

/// Real-space Chern number averaged over every center of the lattice.
pub fn chern_self_averaged(g: &CorrelationMatrix, lattice: &Lattice, radius: f64) -> Result<f64> {
    check_physical(g, lattice)?;
    let mut acc = 0.0;
    for y in 0..lattice.l {
        for x in 0..lattice.l {
            acc += chern_real_space(g, &TripleRegion::new(lattice, (x, y), radius)?);
        }
    }
    Ok(acc / lattice.n_sites() as f64)
}

/// Real-space Chern number averaged over centers on a sub-grid of stride `stride`.
pub fn chern_strided(g: &CorrelationMatrix, lattice: &Lattice, radius: f64, stride: usize) -> Result<f64> {
    check_physical(g, lattice)?;
    let stride = stride.max(1);
    let mut acc = 0.0;
    let mut count = 0usize;
    for y in (0..lattice.l).step_by(stride) {
        for x in (0..lattice.l).step_by(stride) {
            acc += chern_real_space(g, &TripleRegion::new(lattice, (x, y), radius)?);
            count += 1;
        }
    }
    Ok(acc / count as f64)
}

fn check_physical(g: &CorrelationMatrix, lattice: &Lattice) -> Result<()> {
    if g.dim() != lattice.n_modes() {
        return Err(Error::DimensionMismatch { expected: lattice.n_modes(), got: g.dim() });
    }
    Ok(())
}

/// Local Chern marker per site, `2πi Σ_μ [GXGYG − GYGXG]_{(r,μ),(r,μ)}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkerField {
    pub l: usize,
    /// Marker at site `y L + x`.
    pub values: Vec<f64>,
    /// False within [`MARKER_MARGIN`] sites of the coordinate seam.
    pub valid: Vec<bool>,
}

impl MarkerField {
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.l + x]
    }

    /// Mean over valid sites satisfying `pred(x, y)`.
    pub fn mean_where(&self, pred: impl Fn(usize, usize) -> bool) -> Option<f64> {
        let mut acc = 0.0;
        let mut n = 0usize;
        for y in 0..self.l {
            for x in 0..self.l {
                if self.valid[y * self.l + x] && pred(x, y) {
                    acc += self.at(x, y);
                    n += 1;
                }
            }
        }
        (n > 0).then(|| acc / n as f64)
    }
}

/// Local Chern marker with unit-cell coordinates `X, Y ∈ {0, …, L−1}`.
///
/// Periodic boundaries make `X, Y` discontinuous at the seam, so sites within
/// [`MARKER_MARGIN`] of it are flagged invalid.
pub fn chern_marker(g: &CorrelationMatrix, lattice: &Lattice) -> Result<MarkerField> {
    chern_marker_with_origin(g, lattice, (0, 0))
}

/// Local Chern marker with coordinates `(x − x0) mod L`, `(y − y0) mod L`, moving the seam to `origin`.
pub fn chern_marker_with_origin(g: &CorrelationMatrix, lattice: &Lattice, origin: (usize, usize)) -> Result<MarkerField> {
    check_physical(g, lattice)?;
    let l = lattice.l;
    if origin.0 >= l || origin.1 >= l {
        return Err(Error::RegionTooLarge(format!("marker origin {origin:?} for L = {l}")));
    }
    let n = lattice.n_modes();
    let m = g.matrix();
    let rel = |c: usize, o: usize| ((c + l - o) % l) as f64;
    let xs: Vec<f64> = (0..n).map(|i| rel(lattice.coords(i).0, origin.0)).collect();
    let ys: Vec<f64> = (0..n).map(|i| rel(lattice.coords(i).1, origin.1)).collect();
    let mut gx = m.clone();
    for (j, &x) in xs.iter().enumerate() {
        gx.column_mut(j).scale_mut(x);
    }
    let a = gx * m;
    let mut values = vec![0.0; l * l];
    for i in 0..n {
        // d = Σ_k A_ik Y_k G_ki; the second term is conj(d), so 𝒞 = −4π Im d.
        let mut d = ZERO;
        for k in 0..n {
            d += a[(i, k)] * ys[k] * m[(k, i)];
        }
        let (x, y, _) = lattice.coords(i);
        values[y * l + x] += -4.0 * PI * d.im;
    }
    let ok = |c: usize| c >= MARKER_MARGIN && c + MARKER_MARGIN < l;
    let valid = (0..l * l).map(|s| ok((s % l + l - origin.0) % l) && ok((s / l + l - origin.1) % l)).collect();
    Ok(MarkerField { l, values, valid })
}

fn binary_entropy(l: f64) -> f64 {
    let l = l.clamp(0.0, 1.0);
    let mut s = 0.0;
    if l > 0.0 {
        s -= l * l.ln();
    }
    if l < 1.0 {
        s -= (1.0 - l) * (1.0 - l).ln();
    }
    s
}

/// Von Neumann entropy of the modes `region`.
pub fn entanglement_entropy(g: &CorrelationMatrix, region: &[usize]) -> f64 {
    if region.is_empty() {
        return 0.0;
    }
    eigvalsh(&g.restrict(region)).into_iter().map(binary_entropy).sum()
}

/// `I(a, b) = S_a + S_b − S_{a∪b}`.
pub fn mutual_information(g: &CorrelationMatrix, a: &[usize], b: &[usize]) -> Result<f64> {
    if a.iter().any(|i| b.contains(i)) {
        return Err(Error::OverlappingRegions);
    }
    let mut ab = a.to_vec();
    ab.extend_from_slice(b);
    Ok(entanglement_entropy(g, a) + entanglement_entropy(g, b) - entanglement_entropy(g, &ab))
}

/// Vertical strips of width `L/4` starting at columns `0` and `L/2`
/// (centered at `x = L/8` and `x = 5L/8`).
pub fn strip_regions(lattice: &Lattice) -> (Vec<usize>, Vec<usize>) {
    let w = (lattice.l / 4).max(1);
    let strip = |x0: usize| {
        let mut out = Vec::new();
        for y in 0..lattice.l {
            for x in x0..x0 + w {
                out.push(lattice.index(x, y, 0));
                out.push(lattice.index(x, y, 1));
            }
        }
        out
    };
    (strip(0), strip(lattice.l / 2))
}

/// Entanglement contour: `s_i = [−G ln G − (1−G) ln(1−G)]_{ii}` on `region`,
/// summed over the orbitals of each site (flat index / 2); returned as `(site, value)`
/// pairs in first-seen order.
pub fn entanglement_contour(g: &CorrelationMatrix, region: &[usize]) -> Vec<(usize, f64)> {
    let sub = g.restrict(region);
    let (vals, vecs) = eigh(&sub);
    let f: Vec<f64> = vals.iter().map(|&l| binary_entropy(l)).collect();
    let mut per_site: Vec<(usize, f64)> = Vec::new();
    for (a, &mode) in region.iter().enumerate() {
        let mut s = 0.0;
        for (j, &fj) in f.iter().enumerate() {
            s += fj * vecs[(a, j)].norm_sqr();
        }
        let site = mode / 2;
        match per_site.iter_mut().find(|(k, _)| *k == site) {
            Some(e) => e.1 += s,
            None => per_site.push((site, s)),
        }
    }
    per_site
}

/// `C(r) = (1/2L²) Σ_{r',μ,μ'} |G_{(r',μ),(r'+r e_i,μ')}|²` averaged over both axes, `r = 0..=L/2`.
pub fn correlation_decay(g: &CorrelationMatrix, lattice: &Lattice) -> Vec<f64> {
    let l = lattice.l;
    let m = g.matrix();
    let norm = 1.0 / (2.0 * (l * l) as f64);
    (0..=l / 2)
        .map(|r| {
            let mut acc = 0.0;
            for y in 0..l {
                for x in 0..l {
                    for (x2, y2) in [((x + r) % l, y), (x, (y + r) % l)] {
                        for mu in 0..2 {
                            for nu in 0..2 {
                                acc += m[(lattice.index(x, y, mu), lattice.index(x2, y2, nu))].norm_sqr();
                            }
                        }
                    }
                }
            }
            acc * norm / 2.0
        })
        .collect()
}

/// Chord distance `(L/π) sin(π r / L)`.
pub fn chord_distance(l: usize, r: f64) -> f64 {
    l as f64 / PI * (PI * r / l as f64).sin()
}

/// Least-squares line `y = slope x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub rss: f64,
    /// `n ln(RSS/n) + 2k` with `k = 2`.
    pub aic: f64,
    pub n: usize,
}

/// Ordinary least squares on `(x, y)` pairs.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return Err(Error::Invalid(format!("need at least two paired points, got {n}")));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Invalid("degenerate abscissa".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let tss: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let r2 = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
    let aic = n as f64 * (rss.max(1e-300) / n as f64).ln() + 4.0;
    Ok(LineFit { slope, intercept, r2, rss, aic, n })
}

/// Exponential fit: `ln C(r)` against `r` over `r ∈ [r_lo, r_hi]`.
pub fn fit_exponential(c: &[f64], r_lo: usize, r_hi: usize) -> Result<LineFit> {
    let (x, y): (Vec<f64>, Vec<f64>) =
        (r_lo..=r_hi.min(c.len().saturating_sub(1))).filter(|&r| c[r] > 0.0).map(|r| (r as f64, c[r].ln())).unzip();
    fit_line(&x, &y)
}

/// Power-law fit: `ln C(r)` against the log chord distance over `r ∈ [r_lo, r_hi]`.
pub fn fit_power_law(c: &[f64], l: usize, r_lo: usize, r_hi: usize) -> Result<LineFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = (r_lo.max(1)..=r_hi.min(c.len().saturating_sub(1)))
        .filter(|&r| c[r] > 0.0)
        .map(|r| (chord_distance(l, r as f64).ln(), c[r].ln()))
        .unzip();
    fit_line(&x, &y)
}

/// `Δ = min_{λ>1/2} λ − max_{λ<1/2} λ`; errors if an eigenvalue is within 1e-9 of 1/2.
pub fn spectral_gap(g: &CorrelationMatrix) -> Result<f64> {
    let vals = eigvalsh(g.matrix());
    if let Some(&v) = vals.iter().find(|&&v| (v - 0.5).abs() < HALF_TOL) {
        return Err(Error::RegularizationUndefined(v));
    }
    let above = vals.iter().copied().filter(|&v| v > 0.5).fold(f64::INFINITY, f64::min);
    let below = vals.iter().copied().filter(|&v| v < 0.5).fold(f64::NEG_INFINITY, f64::max);
    Ok(match (above.is_finite(), below.is_finite()) {
        (true, true) => above - below,
        // One-sided spectra: measure from the missing side's boundary.
        (true, false) => above,
        (false, true) => 1.0 - below,
        (false, false) => 0.0,
    })
}

/// `G̃ = 1/2 + Sgn(Ḡ − 1/2)/2`.
pub fn regularize(g: &CorrelationMatrix) -> Result<CorrelationMatrix> {
    let (vals, vecs) = eigh(g.matrix());
    if let Some(&v) = vals.iter().find(|&&v| (v - 0.5).abs() < HALF_TOL) {
        return Err(Error::RegularizationUndefined(v));
    }
    let mut kept = vecs.clone();
    for (j, &l) in vals.iter().enumerate() {
        kept.column_mut(j).scale_mut(if l > 0.5 { 1.0 } else { 0.0 });
    }
    let mut out = CorrelationMatrix::from_matrix(crate::linalg::hermitize(&(kept * vecs.adjoint())))?;
    out.hermitize();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_examples() {
        let g = CorrelationMatrix::product_state(4, &[1, 0, 1, 0]).unwrap();
        assert_eq!(entanglement_entropy(&g, &[0, 1]), 0.0);
        let g = CorrelationMatrix::diagonal(&[0.5]);
        assert!((entanglement_entropy(&g, &[0]) - 2f64.ln()).abs() < 1e-15);
        let g = CorrelationMatrix::product_state(4, &[1, 0, 1, 0]).unwrap();
        assert_eq!(mutual_information(&g, &[0], &[1]).unwrap(), 0.0);
        assert!(mutual_information(&g, &[0, 1], &[1]).is_err());
    }

    #[test]
    fn gap_and_regularize_examples() {
        let g = CorrelationMatrix::diagonal(&[0.9, 0.2]);
        assert!((spectral_gap(&g).unwrap() - 0.7).abs() < 1e-12);
        let r = regularize(&g).unwrap();
        assert!(r.distance(&CorrelationMatrix::diagonal(&[1.0, 0.0])) < 1e-12);
        let p = CorrelationMatrix::product_state(2, &[1, 0]).unwrap();
        assert!((spectral_gap(&p).unwrap() - 1.0).abs() < 1e-12);
        assert!(regularize(&p).unwrap().distance(&p) < 1e-12);
        assert!(spectral_gap(&CorrelationMatrix::diagonal(&[0.5, 1.0])).is_err());
    }

    #[test]
    fn mixed_state_chern_is_zero() {
        let lat = Lattice::new(8).unwrap();
        let g = CorrelationMatrix::diagonal(&vec![0.5; lat.n_modes()]);
        assert_eq!(chern_self_averaged(&g, &lat, 3.2).unwrap(), 0.0);
        let m = chern_marker(&g, &lat).unwrap();
        assert!(m.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn triple_regions_are_disjoint_wedges() {
        let lat = Lattice::new(10).unwrap();
        let t = TripleRegion::new(&lat, (3, 7), 4.0).unwrap();
        let mut all: Vec<usize> = t.regions.concat();
        let n = all.len();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), n);
        assert!(t.regions.iter().all(|r| !r.is_empty()));
        assert!(TripleRegion::new(&lat, (0, 0), 6.0).is_err());
    }

    #[test]
    fn line_fit_exact() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let f = fit_line(&x, &y).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12 && (f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn strips_match_geometry() {
        let lat = Lattice::new(12).unwrap();
        let (a, b) = strip_regions(&lat);
        let cols = |v: &[usize]| {
            let mut c: Vec<usize> = v.iter().map(|&i| lat.coords(i).0).collect();
            c.sort();
            c.dedup();
            c
        };
        assert_eq!(cols(&a), vec![0, 1, 2]);
        assert_eq!(cols(&b), vec![6, 7, 8]);
    }
}
