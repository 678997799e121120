//! Adaptive measurement-and-feedforward protocol on the physical/ancillary bilayer.
//!
//! One cycle: for every unit cell `r` (row-major) and orbital `ν ∈ {A, B}`,
//! measure the lower-band OW mode (fSWAP with `d_{r,ν}` on outcome 0), then the
//! upper-band OW mode (fSWAP on outcome 1); scramble the ancillary layer with
//! random hopping gates and measure every ancillary occupation; optionally
//! apply on-site U(1) noise to the physical layer.
//!
//! [`BilayerState`] exploits that the ancillary layer is always a decoupled
//! product state between cycles: it stores the physical correlation matrix and
//! a vector of ancillary occupations. Because the measured OW mode and `d_{r,ν}`
//! are both decoupled eigenmodes when the fSWAP fires, the swap reduces to a
//! rank-one occupation exchange. [`DenseBilayer`] runs the same cycle on the full
//! `4L²`-mode correlation matrix with identical random draws and serves as the
//! reference route.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chern::{AlphaField, Band, Lattice, OwMode, OwModeSet};
use crate::error::{Error, Result};
use crate::gaussian::{CorrelationMatrix, ModeVector, SingleParticleUnitary};
use crate::linalg::{CMat, CVec, C64};
use crate::observables::{chern_strided, correlation_decay, mutual_information, strip_regions, TRIPLE_RADIUS_FRACTION};
use crate::rng::{trajectory_seed, RandomStream};

/// Charge-conservation tolerance per cycle.
pub const CHARGE_TOL: f64 = 1e-10;
/// Trajectories evaluated per parallel batch of an ensemble.
pub const ENSEMBLE_CHUNK: usize = 8;
/// Default interval (cycles) between full spectral clamps.
pub const DEFAULT_CLAMP_EVERY: usize = 10;

/// Initial state of both layers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    /// Random product state with `Q` particles over all `4L²` modes.
    #[default]
    RandomProduct,
    /// Maximally mixed `G = 1/2` on both layers.
    MaximallyMixed,
}

/// Parameters of one protocol run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub lattice: Lattice,
    pub alpha: AlphaField,
    /// Truncation shell; `None` keeps the modes untruncated.
    pub n_shell: Option<usize>,
    pub cycles: usize,
    pub noise_sigma: f64,
    /// Total charge `Q`; defaults to `2L²`.
    pub charge: usize,
    pub seed: u64,
    pub trajectories: usize,
    pub initial: InitialState,
    /// Shuffle the `(r, ν)` sweep order every cycle.
    pub shuffle_order: bool,
    /// Full eigenvalue clamp every this many cycles (0 disables; Hermitization is always applied).
    pub clamp_every: usize,
}

impl ProtocolConfig {
    /// Uniform-`α` configuration with defaults `Q = 2L²`, no noise, random product start.
    pub fn uniform(l: usize, alpha: f64, n_shell: Option<usize>, cycles: usize, seed: u64) -> Result<Self> {
        let lattice = Lattice::new(l)?;
        Ok(Self {
            lattice,
            alpha: AlphaField::uniform(l, alpha),
            n_shell,
            cycles,
            noise_sigma: 0.0,
            charge: 2 * l * l,
            seed,
            trajectories: 1,
            initial: InitialState::RandomProduct,
            shuffle_order: false,
            clamp_every: DEFAULT_CLAMP_EVERY,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.alpha.validate()?;
        if self.alpha.l != self.lattice.l {
            return Err(Error::DimensionMismatch { expected: self.lattice.l, got: self.alpha.l });
        }
        let n_uc = self.lattice.n_sites();
        if self.charge <= n_uc || self.charge >= 3 * n_uc {
            return Err(Error::ChargeOutOfRange { charge: self.charge, lo: n_uc, hi: 3 * n_uc });
        }
        if !(0.0..=1.0).contains(&self.noise_sigma) {
            return Err(Error::Invalid(format!("noise sigma {} outside [0, 1]", self.noise_sigma)));
        }
        if self.n_shell == Some(0) {
            return Err(Error::Invalid("n_shell must be at least 1".into()));
        }
        Ok(())
    }

    /// Builds the OW modes for this configuration.
    pub fn build_modes(&self) -> Result<OwModeSet> {
        OwModeSet::build(self.lattice, &self.alpha, self.n_shell)
    }
}

/// Physical correlation matrix plus decoupled ancillary occupations.
#[derive(Clone, Debug, PartialEq)]
pub struct BilayerState {
    pub lattice: Lattice,
    pub phys: CorrelationMatrix,
    /// Occupation of `d_{r,ν}` at index `2 (y L + x) + ν`.
    pub ancilla: Vec<f64>,
    pub cycle: usize,
}

/// Result of one measurement-and-feedforward step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub outcome: u8,
    pub born_p: f64,
    /// True if the outcome violated the stabilizer target.
    pub mismatch: bool,
    /// True if the fSWAP changed the state (ancilla occupation differed).
    pub transferred: bool,
}

/// Per-cycle counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CycleStats {
    pub mismatches: usize,
    pub transfers: usize,
}

impl BilayerState {
    /// Random product state with `charge` particles spread uniformly over `4L²` modes.
    pub fn init(config: &ProtocolConfig, rng: &mut RandomStream) -> Result<Self> {
        config.validate()?;
        let lat = config.lattice;
        let n = lat.n_modes();
        match config.initial {
            InitialState::RandomProduct => {
                let mut occ: Vec<u8> = (0..2 * n).map(|i| u8::from(i < config.charge)).collect();
                rng.shuffle(&mut occ);
                Ok(Self {
                    lattice: lat,
                    phys: CorrelationMatrix::product_state(n, &occ[..n])?,
                    ancilla: occ[n..].iter().map(|&b| f64::from(b)).collect(),
                    cycle: 0,
                })
            }
            InitialState::MaximallyMixed => Ok(Self {
                lattice: lat,
                phys: CorrelationMatrix::diagonal(&vec![0.5; n]),
                ancilla: vec![0.5; n],
                cycle: 0,
            }),
        }
    }

    /// Assembles a state from parts.
    pub fn from_parts(lattice: Lattice, phys: CorrelationMatrix, ancilla: Vec<f64>) -> Result<Self> {
        if phys.dim() != lattice.n_modes() || ancilla.len() != lattice.n_modes() {
            return Err(Error::DimensionMismatch { expected: lattice.n_modes(), got: phys.dim() });
        }
        Ok(Self { lattice, phys, ancilla, cycle: 0 })
    }

    /// `tr G_phys + Σ n_a`.
    pub fn total_charge(&self) -> f64 {
        self.phys.total_charge() + self.ancilla.iter().sum::<f64>()
    }

    /// Full `4L²` correlation matrix, physical modes first.
    pub fn to_dense(&self) -> CorrelationMatrix {
        let n = self.lattice.n_modes();
        let mut g = CMat::zeros(2 * n, 2 * n);
        g.view_mut((0, 0), (n, n)).copy_from(self.phys.matrix());
        for (i, &a) in self.ancilla.iter().enumerate() {
            g[(n + i, n + i)] = C64::new(a, 0.0);
        }
        CorrelationMatrix::from_matrix(g).expect("block-diagonal Hermitian")
    }

    /// Step 1 for one OW mode paired with ancilla `ancilla_index`.
    pub fn step_measure_feedforward(&mut self, mode: &OwMode, ancilla_index: usize, rng: &mut RandomStream) -> Result<StepOutcome> {
        if ancilla_index >= self.ancilla.len() {
            return Err(Error::IndexOutOfRange { index: ancilla_index, len: self.ancilla.len() });
        }
        let m = self.phys.measure(&mode.mode, rng)?;
        let target = mode.band.target();
        let mismatch = m.outcome != target;
        let mut transferred = false;
        if mismatch {
            let n_chi = f64::from(m.outcome);
            let n_d = self.ancilla[ancilla_index];
            if n_d != n_chi {
                self.phys.add_mode_occupation(&mode.mode, n_d - n_chi)?;
                self.ancilla[ancilla_index] = n_chi;
                transferred = true;
            }
        }
        Ok(StepOutcome { outcome: m.outcome, born_p: m.born_p, mismatch, transferred })
    }

    /// Step 2: random hopping gates on the ancillary layer, then measurement of every ancilla.
    pub fn ancilla_redistribute(&mut self, rng: &mut RandomStream) -> Result<()> {
        let n = self.lattice.n_modes();
        let mut g = CorrelationMatrix::diagonal(&self.ancilla);
        let gates = draw_ancilla_gates(&self.lattice, rng);
        for gate in &gates {
            g.apply_unitary(&gate.unitary(n, 0)?)?;
        }
        for i in 0..n {
            g.measure(&ModeVector::basis(n, i)?, rng)?;
        }
        for i in 0..n {
            self.ancilla[i] = g.matrix()[(i, i)].re.clamp(0.0, 1.0).round();
        }
        Ok(())
    }

    /// Per-mode U(1) phases `e^{4πiθ(n−1/2)}`, `θ ~ U[0, σ)`, on the physical layer.
    pub fn apply_noise(&mut self, sigma: f64, rng: &mut RandomStream) -> Result<()> {
        if sigma <= 0.0 {
            return Ok(());
        }
        let phi = draw_noise(self.lattice.n_modes(), sigma, rng);
        self.phys.apply_phases(&phi)
    }

    /// Hermitizes, and clamps the spectrum when `clamp` is set.
    pub fn stabilize(&mut self, clamp: bool) {
        if clamp {
            self.phys.clamp_spectrum();
        } else {
            self.phys.hermitize();
        }
    }
}

/// One two-mode hopping gate `exp(iθ (d_a^† d_b + h.c.))` on ancillary indices `a, b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HoppingGate {
    pub a: usize,
    pub b: usize,
    pub theta: f64,
}

impl HoppingGate {
    /// Single-particle unitary `[[cos θ, i sin θ], [i sin θ, cos θ]]` on `(offset+a, offset+b)`.
    pub fn unitary(&self, dim: usize, offset: usize) -> Result<SingleParticleUnitary> {
        let (s, c) = self.theta.sin_cos();
        let m = CMat::from_row_slice(2, 2, &[C64::new(c, 0.0), C64::new(0.0, s), C64::new(0.0, s), C64::new(c, 0.0)]);
        SingleParticleUnitary::on_support(dim, m, vec![offset + self.a, offset + self.b])
    }
}

/// Draws `θ_r` then `θ'_r` (row-major) and lists the gates in application order:
/// for each `r`, bonds `r → r+x̂` and `r → r+ŷ` for `ν = A, B`; then on-site `A ↔ B`.
pub fn draw_ancilla_gates(lattice: &Lattice, rng: &mut RandomStream) -> Vec<HoppingGate> {
    let l = lattice.l;
    let theta: Vec<f64> = (0..l * l).map(|_| rng.uniform_below(2.0 * PI)).collect();
    let theta_p: Vec<f64> = (0..l * l).map(|_| rng.uniform_below(2.0 * PI)).collect();
    let mut gates = Vec::with_capacity(5 * l * l);
    for y in 0..l {
        for x in 0..l {
            let t = theta[lattice.site(x, y)];
            for (x2, y2) in [((x + 1) % l, y), (x, (y + 1) % l)] {
                for nu in 0..2 {
                    gates.push(HoppingGate { a: lattice.index(x, y, nu), b: lattice.index(x2, y2, nu), theta: t });
                }
            }
        }
    }
    for y in 0..l {
        for x in 0..l {
            gates.push(HoppingGate { a: lattice.index(x, y, 0), b: lattice.index(x, y, 1), theta: theta_p[lattice.site(x, y)] });
        }
    }
    gates
}

/// Noise phases `φ = 4πθ`, `θ ~ U[0, σ)`, one per mode.
pub fn draw_noise(n: usize, sigma: f64, rng: &mut RandomStream) -> Vec<f64> {
    (0..n).map(|_| 4.0 * PI * rng.uniform_below(sigma)).collect()
}

/// Measurement order of one cycle: `(mode index in the set, ancilla index)`.
pub fn sweep_order(modes: &OwModeSet, shuffle: bool, rng: &mut RandomStream) -> Vec<(usize, usize)> {
    let lat = modes.lattice;
    let mut cells: Vec<(usize, usize)> = (0..lat.n_sites()).flat_map(|s| [(s, 0), (s, 1)]).collect();
    if shuffle {
        rng.shuffle(&mut cells);
    }
    let mut out = Vec::with_capacity(4 * lat.n_sites());
    for (s, nu) in cells {
        let base = (s * 2 + nu) * 2;
        out.push((base, 2 * s + nu));
        out.push((base + 1, 2 * s + nu));
    }
    out
}

/// Runs one full cycle on the decoupled representation.
pub fn run_cycle(state: &mut BilayerState, modes: &OwModeSet, config: &ProtocolConfig, rng: &mut RandomStream) -> Result<CycleStats> {
    let mut stats = CycleStats::default();
    // Noise from the previous cycle's gap; observables then see the steered state.
    if state.cycle > 0 {
        state.apply_noise(config.noise_sigma, rng)?;
    }
    for (mi, ai) in sweep_order(modes, config.shuffle_order, rng) {
        let s = state.step_measure_feedforward(&modes.modes[mi], ai, rng)?;
        stats.mismatches += usize::from(s.mismatch);
        stats.transfers += usize::from(s.transferred);
    }
    state.ancilla_redistribute(rng)?;
    state.cycle += 1;
    let clamp = config.clamp_every > 0 && state.cycle % config.clamp_every == 0;
    state.stabilize(clamp);
    Ok(stats)
}

/// Reference route: the full `4L²` correlation matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseBilayer {
    pub lattice: Lattice,
    pub g: CorrelationMatrix,
    pub cycle: usize,
}

impl DenseBilayer {
    pub fn from_state(state: &BilayerState) -> Self {
        Self { lattice: state.lattice, g: state.to_dense(), cycle: state.cycle }
    }

    fn n(&self) -> usize {
        self.lattice.n_modes()
    }

    /// Physical block.
    pub fn physical(&self) -> CorrelationMatrix {
        let idx: Vec<usize> = (0..self.n()).collect();
        CorrelationMatrix::from_matrix(self.g.restrict(&idx)).expect("principal block")
    }

    /// Ancillary occupations.
    pub fn ancilla(&self) -> Vec<f64> {
        let n = self.n();
        (0..n).map(|i| self.g.matrix()[(n + i, n + i)].re).collect()
    }

    /// Largest physical–ancillary cross correlation.
    pub fn cross_max(&self) -> f64 {
        let n = self.n();
        let a: Vec<usize> = (0..n).collect();
        let b: Vec<usize> = (n..2 * n).collect();
        self.g.cross_block_max(&a, &b)
    }

    /// Step 1 for one mode using a full fSWAP on the `4L²` matrix.
    pub fn step_measure_feedforward(&mut self, mode: &OwMode, ancilla_index: usize, rng: &mut RandomStream) -> Result<StepOutcome> {
        let n = self.n();
        let w = mode.mode.embed(2 * n, 0)?;
        let d = ModeVector::basis(2 * n, n + ancilla_index)?;
        let before = self.g.occupation(&d)?;
        let m = self.g.measure(&w, rng)?;
        let mismatch = m.outcome != mode.band.target();
        let mut transferred = false;
        if mismatch {
            self.g.fswap(&w, &d)?;
            transferred = (before - f64::from(m.outcome)).abs() > 0.5;
        }
        Ok(StepOutcome { outcome: m.outcome, born_p: m.born_p, mismatch, transferred })
    }

    /// Step 2 on the full matrix.
    pub fn ancilla_redistribute(&mut self, rng: &mut RandomStream) -> Result<()> {
        let n = self.n();
        for gate in draw_ancilla_gates(&self.lattice, rng) {
            self.g.apply_unitary(&gate.unitary(2 * n, n)?)?;
        }
        for i in 0..n {
            self.g.measure(&ModeVector::basis(2 * n, n + i)?, rng)?;
        }
        Ok(())
    }

    /// Noise on the physical modes.
    pub fn apply_noise(&mut self, sigma: f64, rng: &mut RandomStream) -> Result<()> {
        if sigma <= 0.0 {
            return Ok(());
        }
        let mut phi = draw_noise(self.n(), sigma, rng);
        phi.extend(std::iter::repeat_n(0.0, self.n()));
        self.g.apply_phases(&phi)
    }
}

/// One cycle on the dense route with the same draw order as [`run_cycle`].
pub fn dense_cycle(state: &mut DenseBilayer, modes: &OwModeSet, config: &ProtocolConfig, rng: &mut RandomStream) -> Result<CycleStats> {
    let mut stats = CycleStats::default();
    if state.cycle > 0 {
        state.apply_noise(config.noise_sigma, rng)?;
    }
    for (mi, ai) in sweep_order(modes, config.shuffle_order, rng) {
        let s = state.step_measure_feedforward(&modes.modes[mi], ai, rng)?;
        stats.mismatches += usize::from(s.mismatch);
        stats.transfers += usize::from(s.transferred);
    }
    state.ancilla_redistribute(rng)?;
    state.cycle += 1;
    state.g.hermitize();
    Ok(stats)
}

/// Which observables a trajectory records and how often.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    /// Record every this many cycles (cycle 0 is the initial state); the final cycle is always recorded.
    pub every: usize,
    pub chern: bool,
    /// Center stride of the self-averaged Chern number (1 = every center).
    pub chern_stride: usize,
    pub mutual_information: bool,
    pub purity: bool,
    pub correlation: bool,
    /// Mean OW-mode occupations (steering signal).
    pub occupations: bool,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            every: 1,
            chern: true,
            chern_stride: 1,
            mutual_information: false,
            purity: true,
            correlation: false,
            occupations: false,
        }
    }
}

/// Observables recorded at one cycle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle: usize,
    pub chern: Option<f64>,
    pub mutual_information: Option<f64>,
    pub purity_deviation: Option<f64>,
    pub charge_physical: f64,
    pub charge_total: f64,
    pub mismatches: usize,
    pub transfers: usize,
    pub lower_occupation: Option<f64>,
    pub upper_occupation: Option<f64>,
    pub correlation: Option<Vec<f64>>,
}

/// Per-trajectory output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryReport {
    pub index: usize,
    pub seed: u64,
    pub records: Vec<CycleRecord>,
    /// `max_t |Q(t) − Q(0)|` over all cycles.
    pub charge_drift: f64,
    pub final_purity_deviation: f64,
    pub error: Option<String>,
}

/// Computes the scheduled observables of `state`.
pub fn observe(state: &BilayerState, modes: &OwModeSet, schedule: &Schedule, stats: CycleStats) -> Result<CycleRecord> {
    let lat = state.lattice;
    let chern = if schedule.chern {
        Some(chern_strided(&state.phys, &lat, TRIPLE_RADIUS_FRACTION * lat.l as f64, schedule.chern_stride)?)
    } else {
        None
    };
    let mi = if schedule.mutual_information {
        let (a, b) = strip_regions(&lat);
        Some(mutual_information(&state.phys, &a, &b)?)
    } else {
        None
    };
    let (lower, upper) = if schedule.occupations {
        let mut lo = 0.0;
        let mut up = 0.0;
        for m in &modes.modes {
            let o = state.phys.occupation(&m.mode)?;
            match m.band {
                Band::Lower => lo += o,
                Band::Upper => up += o,
            }
        }
        let k = (modes.modes.len() / 2) as f64;
        (Some(lo / k), Some(up / k))
    } else {
        (None, None)
    };
    Ok(CycleRecord {
        cycle: state.cycle,
        chern,
        mutual_information: mi,
        purity_deviation: schedule.purity.then(|| state.phys.purity_deviation()),
        charge_physical: state.phys.total_charge(),
        charge_total: state.total_charge(),
        mismatches: stats.mismatches,
        transfers: stats.transfers,
        lower_occupation: lower,
        upper_occupation: upper,
        correlation: schedule.correlation.then(|| correlation_decay(&state.phys, &lat)),
    })
}

/// Runs one trajectory, calling `hook(state, stats)` after every cycle (and once
/// with default stats for the initial state).
pub fn run_trajectory_with<F>(config: &ProtocolConfig, modes: &OwModeSet, index: usize, mut hook: F) -> Result<BilayerState>
where
    F: FnMut(&BilayerState, CycleStats) -> Result<()>,
{
    let seed = trajectory_seed(config.seed, index as u64);
    let mut rng = RandomStream::new(seed);
    let mut state = BilayerState::init(config, &mut rng)?;
    hook(&state, CycleStats::default())?;
    for _ in 0..config.cycles {
        let stats = run_cycle(&mut state, modes, config, &mut rng)?;
        hook(&state, stats)?;
    }
    Ok(state)
}

/// Runs one trajectory and records the scheduled observables.
pub fn run_trajectory(config: &ProtocolConfig, modes: &OwModeSet, schedule: &Schedule, index: usize) -> (TrajectoryReport, Option<BilayerState>) {
    let seed = trajectory_seed(config.seed, index as u64);
    let mut records = Vec::new();
    let mut q0 = None;
    let mut drift = 0.0f64;
    let every = schedule.every.max(1);
    let result = run_trajectory_with(config, modes, index, |s, stats| {
        let q = s.total_charge();
        let q0 = *q0.get_or_insert(q);
        drift = drift.max((q - q0).abs());
        if s.cycle % every == 0 || s.cycle == config.cycles {
            records.push(observe(s, modes, schedule, stats)?);
        }
        Ok(())
    });
    match result {
        Ok(state) => {
            let purity = state.phys.purity_deviation();
            let report = TrajectoryReport { index, seed, records, charge_drift: drift, final_purity_deviation: purity, error: None };
            (report, Some(state))
        }
        Err(e) => {
            let report = TrajectoryReport {
                index,
                seed,
                records,
                charge_drift: drift,
                final_purity_deviation: f64::NAN,
                error: Some(e.to_string()),
            };
            (report, None)
        }
    }
}

/// Ensemble output: per-trajectory reports, the averaged final physical
/// correlation matrix and per-cycle means.
#[derive(Clone, Debug)]
pub struct EnsembleResult {
    pub trajectories: Vec<TrajectoryReport>,
    /// `Ḡ` over successful trajectories.
    pub mean_g: CorrelationMatrix,
    pub completed: usize,
}

impl EnsembleResult {
    /// Mean of a per-cycle scalar across trajectories, indexed like the records.
    pub fn mean_series(&self, f: impl Fn(&CycleRecord) -> Option<f64>) -> Vec<(usize, f64)> {
        let ok: Vec<&TrajectoryReport> = self.trajectories.iter().filter(|t| t.error.is_none()).collect();
        let Some(first) = ok.first() else { return Vec::new() };
        (0..first.records.len())
            .filter_map(|i| {
                let vals: Vec<f64> = ok.iter().filter_map(|t| t.records.get(i).and_then(&f)).collect();
                (!vals.is_empty()).then(|| (first.records[i].cycle, vals.iter().sum::<f64>() / vals.len() as f64))
            })
            .collect()
    }
}

/// Runs `config.trajectories` trajectories in parallel batches, accumulating `Ḡ`
/// in trajectory-index order so the result does not depend on the worker count.
pub fn run_ensemble(config: &ProtocolConfig, modes: &OwModeSet, schedule: &Schedule) -> Result<EnsembleResult> {
    config.validate()?;
    let n = config.lattice.n_modes();
    let mut sum = CMat::zeros(n, n);
    let mut reports = Vec::with_capacity(config.trajectories);
    let mut completed = 0usize;
    let indices: Vec<usize> = (0..config.trajectories).collect();
    for chunk in indices.chunks(ENSEMBLE_CHUNK) {
        let batch: Vec<(TrajectoryReport, Option<BilayerState>)> =
            chunk.par_iter().map(|&i| run_trajectory(config, modes, schedule, i)).collect();
        for (report, state) in batch {
            if let Some(s) = state {
                sum += s.phys.matrix();
                completed += 1;
            }
            reports.push(report);
        }
    }
    if completed > 0 {
        sum /= C64::new(completed as f64, 0.0);
    }
    let mut mean_g = CorrelationMatrix::from_matrix(crate::linalg::hermitize(&sum))?;
    mean_g.hermitize();
    Ok(EnsembleResult { trajectories: reports, mean_g, completed })
}

/// Occupations of every mode in `modes` on `g`.
pub fn mode_occupations(g: &CorrelationMatrix, modes: &OwModeSet) -> Result<Vec<f64>> {
    modes.modes.iter().map(|m| g.occupation(&m.mode)).collect()
}

/// Dense embedding of a physical mode into the bilayer.
pub fn embed_physical(mode: &ModeVector, lattice: &Lattice) -> Result<ModeVector> {
    mode.embed(2 * lattice.n_modes(), 0)
}

/// Vector with a single unit entry (helper for tests and diagnostics).
pub fn unit_vector(dim: usize, i: usize) -> CVec {
    let mut v = CVec::zeros(dim);
    v[i] = C64::new(1.0, 0.0);
    v
}
