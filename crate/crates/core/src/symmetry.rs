//! Symmetry classes of Gaussian evolution operators and Gaussian POVMs.
//!
//! An evolution operator `exp(−Σ M_ij c_i^† c_j)` is characterized by `M`. Its
//! symmetries are checked with
//! * TRS: `M = U^† M^* U`,
//! * PHS: `M = −(U^† M U)^T`,
//! * CS:  `M = −(U^† M^* U)^T`.
//!
//! The transfer matrix `e^M` lives in a Lie group whose algebra is sampled by
//! projecting Gaussian matrices onto the null space of its real-linear defining
//! relations. Each transfer-matrix class corresponds to a partner class of the
//! evolution operator through a cyclic shift of the ten labels.
//!
//! Matrices of size `n` use `S = σ^z ⊗ 1`, `Ω = iσ^y ⊗ 1 = [[0, 1], [−1, 0]] ⊗ 1`,
//! and, for `4 | n`, `J = σ^z ⊗ Ω ⊗ 1`, `K = 1 ⊗ Ω ⊗ 1`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{majorana_operators, quadratic_hamiltonian, ManyBodyOperator};
use crate::linalg::{eigvalsh, expm, kron, max_abs, max_diff, CMat, C64, I, ONE, ZERO};
use crate::rng::RandomStream;

/// Pass threshold of symmetry and algebra checks.
pub const SYM_TOL: f64 = 1e-10;
/// POVM identity tolerance.
pub const POVM_TOL: f64 = 1e-12;
/// Witness slack required on nontrivial samples.
pub const WITNESS_SLACK: f64 = 1e-8;
/// Samples with all `|λ| ≤` this are trivial and skipped.
pub const TRIVIAL_LAMBDA: f64 = 1e-3;

/// The ten Altland–Zirnbauer labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassLabel {
    A,
    AIII,
    AI,
    BDI,
    D,
    DIII,
    AII,
    CII,
    C,
    CI,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 10] = [
        ClassLabel::A,
        ClassLabel::AIII,
        ClassLabel::AI,
        ClassLabel::BDI,
        ClassLabel::D,
        ClassLabel::DIII,
        ClassLabel::AII,
        ClassLabel::CII,
        ClassLabel::C,
        ClassLabel::CI,
    ];

    /// Evolution-operator class whose operators have transfer matrices in class `self`.
    pub fn meo_partner(self) -> ClassLabel {
        use ClassLabel::*;
        match self {
            AIII => A,
            A => AIII,
            BDI => AI,
            D => BDI,
            DIII => D,
            AII => DIII,
            CII => AII,
            C => CII,
            CI => C,
            AI => CI,
        }
    }

    pub fn name(self) -> &'static str {
        use ClassLabel::*;
        match self {
            A => "A",
            AIII => "AIII",
            AI => "AI",
            BDI => "BDI",
            D => "D",
            DIII => "DIII",
            AII => "AII",
            CII => "CII",
            C => "C",
            CI => "CI",
        }
    }
}

/// Symmetry type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymKind {
    Trs,
    Phs,
    Cs,
}

/// First-quantized symmetry action.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryAction {
    pub kind: SymKind,
    pub unitary: CMat,
    /// `U U^* = sign · 1` for TRS/PHS; `+1` for CS.
    pub sign: i8,
}

impl SymmetryAction {
    pub fn new(kind: SymKind, unitary: CMat) -> Result<Self> {
        let n = unitary.nrows();
        let res = crate::linalg::unitarity_residual(&unitary);
        if res > 1e-12 {
            return Err(Error::NotUnitary { residual: res });
        }
        let uu = &unitary * unitary.map(|z| z.conj());
        let id = CMat::identity(n, n);
        let sign = if kind == SymKind::Cs || max_diff(&uu, &id) < 1e-12 {
            1
        } else if max_diff(&uu, &(-&id)) < 1e-12 {
            -1
        } else {
            return Err(Error::Invalid("U U* is not ±1".into()));
        };
        Ok(Self { kind, unitary, sign })
    }

    /// True if both act identically up to a global phase of `U`.
    pub fn same_as(&self, other: &SymmetryAction) -> bool {
        if self.kind != other.kind || self.unitary.shape() != other.unitary.shape() {
            return false;
        }
        let n = self.unitary.nrows() as f64;
        ((self.unitary.adjoint() * &other.unitary).trace().norm() - n).abs() < 1e-9
    }
}

/// Residual of the symmetry constraint of `action` on `M`.
pub fn symmetry_residual(m: &CMat, action: &SymmetryAction) -> Result<f64> {
    let u = &action.unitary;
    if m.nrows() != m.ncols() || u.nrows() != m.nrows() {
        return Err(Error::DimensionMismatch { expected: u.nrows(), got: m.nrows() });
    }
    let ud = u.adjoint();
    let rhs = match action.kind {
        SymKind::Trs => &ud * m.map(|z| z.conj()) * u,
        SymKind::Phs => -(&ud * m * u).transpose(),
        SymKind::Cs => -(&ud * m.map(|z| z.conj()) * u).transpose(),
    };
    Ok(max_diff(m, &rhs))
}

/// `(holds, residual)` of a symmetry constraint with threshold [`SYM_TOL`].
pub fn check_meo_symmetry(m: &CMat, action: &SymmetryAction) -> Result<(bool, f64)> {
    let r = symmetry_residual(m, action)?;
    Ok((r <= SYM_TOL, r))
}

fn real(m: DMatrix<f64>) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

fn sigma_z() -> CMat {
    real(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]))
}

fn omega2() -> CMat {
    real(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]))
}

fn id(n: usize) -> CMat {
    CMat::identity(n, n)
}

fn require(n: usize, k: usize) -> Result<()> {
    if n == 0 || n % k != 0 {
        return Err(Error::Invalid(format!("size {n} is not a positive multiple of {k}")));
    }
    Ok(())
}

/// `σ^z ⊗ 1_{n/2}`.
pub fn s_matrix(n: usize) -> Result<CMat> {
    require(n, 2)?;
    Ok(kron(&sigma_z(), &id(n / 2)))
}

/// `[[0, 1], [−1, 0]] ⊗ 1_{n/2}`.
pub fn omega_matrix(n: usize) -> Result<CMat> {
    require(n, 2)?;
    Ok(kron(&omega2(), &id(n / 2)))
}

/// `σ^z ⊗ Ω ⊗ 1_{n/4}`.
pub fn j_matrix(n: usize) -> Result<CMat> {
    require(n, 4)?;
    Ok(kron(&kron(&sigma_z(), &omega2()), &id(n / 4)))
}

/// `1_2 ⊗ Ω ⊗ 1_{n/4}`.
pub fn k_matrix(n: usize) -> Result<CMat> {
    require(n, 4)?;
    Ok(kron(&kron(&id(2), &omega2()), &id(n / 4)))
}

/// Symmetries of evolution-operator class `class` at size `n`.
pub fn meo_symmetries(class: ClassLabel, n: usize) -> Result<Vec<SymmetryAction>> {
    use ClassLabel::*;
    use SymKind::*;
    let a = |k, u| SymmetryAction::new(k, u);
    Ok(match class {
        A => vec![],
        AIII => vec![a(Cs, s_matrix(n)?)?],
        AI => vec![a(Trs, id(n))?],
        BDI => vec![a(Trs, id(n))?, a(Phs, s_matrix(n)?)?, a(Cs, s_matrix(n)?)?],
        D => vec![a(Phs, id(n))?],
        DIII => vec![a(Trs, omega_matrix(n)?)?, a(Phs, id(n))?, a(Cs, omega_matrix(n)?)?],
        AII => vec![a(Trs, omega_matrix(n)?)?],
        CII => vec![a(Trs, j_matrix(n)?)?, a(Phs, k_matrix(n)?)?, a(Cs, s_matrix(n)?)?],
        C => vec![a(Phs, omega_matrix(n)?)?],
        CI => vec![a(Trs, id(n))?, a(Phs, omega_matrix(n)?)?, a(Cs, omega_matrix(n)?)?],
    })
}

type Constraint = Box<dyn Fn(&CMat) -> CMat>;

/// Real-linear defining relations `L(M) = 0` of the transfer-matrix algebra of `class`.
pub fn algebra_constraints(class: ClassLabel, n: usize) -> Result<Vec<Constraint>> {
    use ClassLabel::*;
    let conj = |m: &CMat| m.map(|z| z.conj());
    let imag: Constraint = Box::new(move |m: &CMat| m.map(|z| C64::new(z.im, 0.0)));
    let antisym: Constraint = Box::new(|m: &CMat| m + m.transpose());
    Ok(match class {
        // gl(N, C)
        AIII => vec![],
        // u(N, N): M S + S M^† = 0
        A => {
            let s = s_matrix(n)?;
            vec![Box::new(move |m: &CMat| m * &s + &s * m.adjoint())]
        }
        // gl(N, R)
        BDI => vec![imag],
        // o(N, N): real, M^T S + S M = 0
        D => {
            let s = s_matrix(n)?;
            vec![imag, Box::new(move |m: &CMat| m.transpose() * &s + &s * m)]
        }
        // o(N, C): M = −M^T
        DIII => {
            require(n, 1)?;
            vec![antisym]
        }
        // so*(2N): M = −M^T, M^† Ω + Ω M = 0
        AII => {
            let o = omega_matrix(n)?;
            vec![antisym, Box::new(move |m: &CMat| m.adjoint() * &o + &o * m)]
        }
        // u*(2N): Ω^T M^* Ω = M
        CII => {
            let o = omega_matrix(n)?;
            vec![Box::new(move |m: &CMat| o.transpose() * conj(m) * &o - m)]
        }
        // sp(2N, 2N) as used here: M^† S + S M = 0, J^T M^* J = M
        C => {
            let s = s_matrix(n)?;
            let j = j_matrix(n)?;
            vec![
                Box::new(move |m: &CMat| m.adjoint() * &s + &s * m),
                Box::new(move |m: &CMat| j.transpose() * conj(m) * &j - m),
            ]
        }
        // sp(2N, C): M^T Ω + Ω M = 0
        CI => {
            let o = omega_matrix(n)?;
            vec![Box::new(move |m: &CMat| m.transpose() * &o + &o * m)]
        }
        // sp(2N, R): real, M Ω + Ω M^T = 0
        AI => {
            let o = omega_matrix(n)?;
            vec![imag, Box::new(move |m: &CMat| m * &o + &o * m.transpose())]
        }
    })
}

/// Largest residual of the algebra relations on `M`.
pub fn algebra_residual(class: ClassLabel, m: &CMat) -> Result<f64> {
    let cs = algebra_constraints(class, m.nrows())?;
    Ok(cs.iter().map(|c| max_abs(&c(m))).fold(0.0, f64::max))
}

/// Orthonormal real basis of the algebra as `n × n` complex matrices.
pub fn algebra_basis(class: ClassLabel, n: usize) -> Result<Vec<CMat>> {
    let cs = algebra_constraints(class, n)?;
    let dim = 2 * n * n;
    let unit = |k: usize| {
        let mut m = CMat::zeros(n, n);
        let (i, j) = ((k % (n * n)) / n, k % n);
        m[(i, j)] = if k < n * n { ONE } else { I };
        m
    };
    if cs.is_empty() {
        return Ok((0..dim).map(unit).collect());
    }
    // Gram matrix A^T A of the stacked real constraint map.
    let cols: Vec<Vec<f64>> = (0..dim)
        .map(|k| {
            let e = unit(k);
            cs.iter().flat_map(|c| c(&e).iter().flat_map(|z| [z.re, z.im]).collect::<Vec<_>>()).collect()
        })
        .collect();
    let gram = DMatrix::from_fn(dim, dim, |a, b| cols[a].iter().zip(&cols[b]).map(|(x, y)| x * y).sum::<f64>());
    let eig = gram.symmetric_eigen();
    let mut basis = Vec::new();
    for (k, &ev) in eig.eigenvalues.iter().enumerate() {
        if ev.abs() < 1e-9 {
            let v = eig.eigenvectors.column(k);
            let m = CMat::from_fn(n, n, |i, j| C64::new(v[i * n + j], v[n * n + i * n + j]));
            basis.push(m);
        }
    }
    Ok(basis)
}

/// Random algebra element: Gaussian coefficients on the orthonormal basis, times `scale`.
pub fn sample_from_basis(basis: &[CMat], n: usize, scale: f64, rng: &mut RandomStream) -> CMat {
    let mut m = CMat::zeros(n, n);
    for b in basis {
        m += b * C64::new(scale * rng.normal(), 0.0);
    }
    m
}

/// Samples the transfer-matrix algebra of `class` at size `n`.
pub fn sample_stm_algebra(class: ClassLabel, n: usize, rng: &mut RandomStream) -> Result<CMat> {
    let basis = algebra_basis(class, n)?;
    Ok(sample_from_basis(&basis, n, 1.0, rng))
}

/// Residual of the group relation satisfied by `t = e^M` for `M` in the algebra of `class`.
pub fn group_relation_residual(class: ClassLabel, t: &CMat) -> Result<f64> {
    use ClassLabel::*;
    let n = t.nrows();
    let conj = t.map(|z| z.conj());
    let imag = t.iter().fold(0.0f64, |a, z| a.max(z.im.abs()));
    Ok(match class {
        AIII => 0.0,
        A => {
            let s = s_matrix(n)?;
            max_diff(&(t * &s * t.adjoint()), &s)
        }
        BDI => imag,
        D => {
            let s = s_matrix(n)?;
            imag.max(max_diff(&(t.transpose() * &s * t), &s))
        }
        DIII => max_diff(&(t.transpose() * t), &id(n)),
        AII => {
            let o = omega_matrix(n)?;
            max_diff(&(t.transpose() * t), &id(n)).max(max_diff(&(t.adjoint() * &o * t), &o))
        }
        CII => {
            let o = omega_matrix(n)?;
            max_diff(&(o.transpose() * &conj * &o), t)
        }
        C => {
            let s = s_matrix(n)?;
            let j = j_matrix(n)?;
            max_diff(&(t.adjoint() * &s * t), &s).max(max_diff(&(j.transpose() * &conj * &j), t))
        }
        CI => {
            let o = omega_matrix(n)?;
            max_diff(&(t.transpose() * &o * t), &o)
        }
        AI => {
            let o = omega_matrix(n)?;
            imag.max(max_diff(&(t * &o * t.transpose()), &o))
        }
    })
}

/// Status of a non-partner class on the sampled operators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum NonPartnerStatus {
    /// Every symmetry of the class is also a symmetry of the partner class.
    Implied,
    /// At least one symmetry fails on every sample; `min_residual` is the smallest
    /// per-sample maximal residual.
    Fails { min_residual: f64 },
    /// Some sample satisfied every symmetry of the class.
    UnexpectedPass { sample: usize },
}

/// Check result of one symmetry of the partner class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartnerCheck {
    pub kind: SymKind,
    pub sign: i8,
    pub max_residual: f64,
    pub pass: bool,
}

/// One row of the correspondence table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceRow {
    pub stm_class: ClassLabel,
    pub meo_class: ClassLabel,
    pub n: usize,
    pub samples: usize,
    pub algebra_max_residual: f64,
    pub group_max_residual: f64,
    pub partner_checks: Vec<PartnerCheck>,
    pub non_partner: Vec<(ClassLabel, NonPartnerStatus)>,
    pub pass: bool,
}

/// Verifies one row: partner symmetries hold on every sample and every
/// non-partner class not implied by the partner fails on every sample.
pub fn verify_correspondence(stm_class: ClassLabel, n: usize, samples: usize, rng: &mut RandomStream) -> Result<CorrespondenceRow> {
    let meo = stm_class.meo_partner();
    let basis = algebra_basis(stm_class, n)?;
    let partner_syms = meo_symmetries(meo, n)?;
    let mut alg_res = 0.0f64;
    let mut grp_res = 0.0f64;
    let mut partner_res = vec![0.0f64; partner_syms.len()];
    let others: Vec<(ClassLabel, Vec<SymmetryAction>, bool)> = ClassLabel::ALL
        .iter()
        .filter(|&&c| c != meo)
        .map(|&c| {
            let syms = meo_symmetries(c, n)?;
            let implied = syms.iter().all(|s| partner_syms.iter().any(|p| p.same_as(s)));
            Ok((c, syms, implied))
        })
        .collect::<Result<_>>()?;
    let mut min_fail = vec![f64::INFINITY; others.len()];
    let mut unexpected: Vec<Option<usize>> = vec![None; others.len()];
    for s in 0..samples {
        let m = sample_from_basis(&basis, n, 1.0, rng);
        alg_res = alg_res.max(algebra_residual(stm_class, &m)?);
        grp_res = grp_res.max(group_relation_residual(stm_class, &expm(&(&m * C64::new(0.3, 0.0))))?);
        for (k, sym) in partner_syms.iter().enumerate() {
            partner_res[k] = partner_res[k].max(symmetry_residual(&m, sym)?);
        }
        for (k, (_, syms, implied)) in others.iter().enumerate() {
            if *implied {
                continue;
            }
            let worst = syms.iter().map(|sy| symmetry_residual(&m, sy)).collect::<Result<Vec<f64>>>()?.into_iter().fold(0.0, f64::max);
            min_fail[k] = min_fail[k].min(worst);
            if worst <= SYM_TOL && unexpected[k].is_none() {
                unexpected[k] = Some(s);
            }
        }
    }
    let partner_checks: Vec<PartnerCheck> = partner_syms
        .iter()
        .zip(&partner_res)
        .map(|(sy, &r)| PartnerCheck { kind: sy.kind, sign: sy.sign, max_residual: r, pass: r <= SYM_TOL })
        .collect();
    let non_partner: Vec<(ClassLabel, NonPartnerStatus)> = others
        .iter()
        .enumerate()
        .map(|(k, (c, _, implied))| {
            let st = if *implied {
                NonPartnerStatus::Implied
            } else if let Some(s) = unexpected[k] {
                NonPartnerStatus::UnexpectedPass { sample: s }
            } else {
                NonPartnerStatus::Fails { min_residual: min_fail[k] }
            };
            (*c, st)
        })
        .collect();
    let pass = alg_res <= 1e-12
        && grp_res <= SYM_TOL
        && partner_checks.iter().all(|p| p.pass)
        && non_partner.iter().all(|(_, s)| !matches!(s, NonPartnerStatus::UnexpectedPass { .. }));
    Ok(CorrespondenceRow {
        stm_class,
        meo_class: meo,
        n,
        samples,
        algebra_max_residual: alg_res,
        group_max_residual: grp_res,
        partner_checks,
        non_partner,
        pass,
    })
}

/// Classes with an explicit Gaussian POVM construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdmissibleClass {
    A,
    AI,
    BDI,
    D,
}

/// `‖Σ_m w_m K_m^† K_m − 1‖_max` for the two-outcome construction of `class`.
///
/// * A / AI: `K = e^{(λ + iφ) n}`, `λ = ±α`, `w_λ = e^{−λ}/(2 cosh α)` (`φ = 0` for AI).
/// * BDI / D: `K = exp(−i(λ + iφ) γ_1 γ_2)`, `λ = ±α`, `w = 1/(2 cosh 2α)` (`φ = 0` for BDI).
pub fn povm_check_construction(class: AdmissibleClass, alpha: f64, phi: f64) -> Result<f64> {
    let c = crate::fock::mode_operator(1, 0)?;
    let n_op = c.adjoint().mul(&c);
    let gam = majorana_operators(1)?;
    let g1g2 = gam[0].mul(&gam[1]);
    let mut sum = CMat::zeros(2, 2);
    for lam in [alpha, -alpha] {
        let (k, w) = match class {
            AdmissibleClass::A | AdmissibleClass::AI => {
                let ph = if class == AdmissibleClass::A { phi } else { 0.0 };
                (n_op.scale(C64::new(lam, ph)).exp(), (-lam).exp() / (2.0 * alpha.cosh()))
            }
            AdmissibleClass::BDI | AdmissibleClass::D => {
                let ph = if class == AdmissibleClass::D { phi } else { 0.0 };
                (g1g2.scale(-I * C64::new(lam, ph)).exp(), 1.0 / (2.0 * (2.0 * alpha).cosh()))
            }
        };
        sum += k.adjoint().mul(&k).matrix() * C64::new(w, 0.0);
    }
    Ok(max_diff(&sum, &id(2)))
}

/// Evolution-operator classes with an inadmissibility witness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InadmissibleClass {
    AIII,
    C,
    CI,
    CII,
    DIII,
}

impl InadmissibleClass {
    pub const ALL: [InadmissibleClass; 5] =
        [InadmissibleClass::AIII, InadmissibleClass::C, InadmissibleClass::CI, InadmissibleClass::CII, InadmissibleClass::DIII];

    /// Transfer-matrix class whose algebra generates Kraus operators of this class.
    pub fn stm_class(self) -> ClassLabel {
        match self {
            InadmissibleClass::AIII => ClassLabel::A,
            InadmissibleClass::C => ClassLabel::CI,
            InadmissibleClass::CI => ClassLabel::AI,
            InadmissibleClass::CII => ClassLabel::C,
            InadmissibleClass::DIII => ClassLabel::AII,
        }
    }
}

/// Per-class witness summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub class: InadmissibleClass,
    pub n_modes: usize,
    pub samples: usize,
    pub skipped: usize,
    /// Smallest slack over nontrivial samples.
    pub min_slack: f64,
    /// Largest deviation from `±` pairing of the log-singular values.
    pub max_pairing_error: f64,
    /// Largest deviation from double degeneracy (CII only).
    pub max_degeneracy_error: Option<f64>,
    pub pass: bool,
}

/// Log-eigenvalues of `e^{−M^†} e^{−M}`, ascending.
pub fn log_singular_values(m: &CMat) -> Vec<f64> {
    let k = expm(&(-m));
    eigvalsh(&(k.adjoint() * &k)).into_iter().map(|v| v.max(1e-300).ln()).collect()
}

fn pairing_error(lams: &[f64]) -> f64 {
    let n = lams.len();
    (0..n).map(|i| (lams[i] + lams[n - 1 - i]).abs()).fold(0.0, f64::max)
}

fn trace_ratio(k: &ManyBodyOperator) -> f64 {
    let kk = k.adjoint().mul(k);
    (kk.trace() / C64::new(kk.matrix().nrows() as f64, 0.0)).re
}

/// One witness sample: `(slack, λ list)` or `None` if trivial.
pub fn witness_sample(class: InadmissibleClass, m: &CMat) -> Result<Option<(f64, Vec<f64>)>> {
    match class {
        InadmissibleClass::DIII => {
            // Majorana form K = exp(−½ γ^T M γ) on 2n Majoranas, n = m.nrows() / 2 complex modes.
            let two_n = m.nrows();
            let modes = two_n / 2;
            let gam = majorana_operators(modes)?;
            let dim = 1usize << modes;
            let mut q = CMat::zeros(dim, dim);
            for a in 0..two_n {
                for b in 0..two_n {
                    if m[(a, b)] != ZERO {
                        q += gam[a].mul(&gam[b]).matrix() * m[(a, b)];
                    }
                }
            }
            let k = ManyBodyOperator::from_matrix(modes, expm(&(q * C64::new(-0.5, 0.0))))?;
            // Majorana transfer matrix e^{2M}; T = e^{2M} e^{2M^†}, λ = ln eig(T) / 4.
            let t = expm(&(m * C64::new(2.0, 0.0)));
            let lams: Vec<f64> = eigvalsh(&(&t * t.adjoint())).into_iter().map(|v| v.max(1e-300).ln() / 4.0).collect();
            if lams.iter().all(|l| l.abs() <= TRIVIAL_LAMBDA) {
                return Ok(None);
            }
            let half = two_n / 2;
            let mut gamma = ManyBodyOperator::from_matrix(modes, CMat::zeros(dim, dim))?;
            for i in 0..half {
                gamma = gamma.add(&gam[i].mul(&gam[half + i]).scale(I));
            }
            let g2 = gamma.mul(&gamma);
            let kk = k.adjoint().mul(&k);
            let c1 = (kk.trace() / C64::new(dim as f64, 0.0)).re;
            let c2 = (kk.mul(&g2).trace() / g2.trace()).re;
            Ok(Some((c2 - c1, lams)))
        }
        _ => {
            let lams = log_singular_values(m);
            if lams.iter().all(|l| l.abs() <= TRIVIAL_LAMBDA) {
                return Ok(None);
            }
            let k = quadratic_hamiltonian(&(-m))?.exp();
            let kk = k.adjoint().mul(&k);
            let vac = kk.matrix()[(0, 0)].re;
            Ok(Some((trace_ratio(&k) - vac, lams)))
        }
    }
}

/// Certifies strict witness slack on random nontrivial Kraus samples of `class`.
///
/// Complex classes use `n_modes` fermion modes and `K = exp(−Σ M c^† c)`; DIII
/// uses `2 n_modes` Majoranas.
pub fn povm_witness_inadmissible(class: InadmissibleClass, n_modes: usize, samples: usize, scale: f64, rng: &mut RandomStream) -> Result<WitnessReport> {
    let stm = class.stm_class();
    let n = if class == InadmissibleClass::DIII { 2 * n_modes } else { n_modes };
    let basis = algebra_basis(stm, n)?;
    let mut min_slack = f64::INFINITY;
    let mut pairing = 0.0f64;
    let mut degeneracy: Option<f64> = (class == InadmissibleClass::CII).then_some(0.0);
    let mut skipped = 0usize;
    for _ in 0..samples {
        let m = sample_from_basis(&basis, n, scale, rng);
        match witness_sample(class, &m)? {
            None => skipped += 1,
            Some((slack, lams)) => {
                min_slack = min_slack.min(slack);
                pairing = pairing.max(pairing_error(&lams));
                if let Some(d) = degeneracy.as_mut() {
                    for pair in lams.chunks(2) {
                        *d = d.max((pair[0] - pair[pair.len() - 1]).abs());
                    }
                }
            }
        }
    }
    let pass = skipped < samples && min_slack > WITNESS_SLACK && pairing < 1e-8 && degeneracy.is_none_or(|d| d < 1e-8);
    Ok(WitnessReport {
        class,
        n_modes,
        samples,
        skipped,
        min_slack,
        max_pairing_error: pairing,
        max_degeneracy_error: degeneracy,
        pass,
    })
}
