//! Experiment drivers. Each returns a typed, serializable result plus CSV tables.

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use steer_core::chern::{AlphaField, Lattice};
use steer_core::lindblad::{convergence_time, integrate, BandOccupations, LindbladParams, LindbladSeries};
use steer_core::linalg::C64;
use steer_core::observables::{
    chern_marker_with_origin, chern_strided, chord_distance, correlation_decay, entanglement_contour, fit_exponential, fit_line,
    fit_power_law, regularize, spectral_gap, LineFit, TRIPLE_RADIUS_FRACTION,
};
use steer_core::protocol::{run_ensemble, run_trajectory_with, EnsembleResult, ProtocolConfig, Schedule, TrajectoryReport, ENSEMBLE_CHUNK};
use steer_core::rng::RandomStream;
use steer_core::symmetry::{
    povm_check_construction, povm_witness_inadmissible, verify_correspondence, AdmissibleClass, ClassLabel, CorrespondenceRow,
    InadmissibleClass, WitnessReport, POVM_TOL,
};

use crate::config::{Kind, RunConfig};
use crate::report::{num, Table};

/// Cycle window of the steering approach fit.
pub const APPROACH_WINDOW: [usize; 2] = [1, 6];

/// Output of one experiment.
pub struct Outcome {
    pub result: serde_json::Value,
    pub tables: Vec<Table>,
    pub completed: usize,
    pub failed: Vec<usize>,
    pub errors: Vec<String>,
}

/// Ensemble means of one recorded cycle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub cycle: usize,
    pub chern_mean: Option<f64>,
    /// Standard error of the mean.
    pub chern_sem: Option<f64>,
    pub mutual_information_mean: Option<f64>,
    pub purity_deviation_max: Option<f64>,
    pub lower_occupation_mean: Option<f64>,
    pub upper_occupation_mean: Option<f64>,
}

/// Per-trajectory summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub index: usize,
    pub seed: u64,
    pub final_chern: Option<f64>,
    pub charge_drift: f64,
    pub final_purity_deviation: f64,
    pub error: Option<String>,
}

/// Quantities derived from the trajectory-averaged correlation matrix and the
/// trajectory-resolved final records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub completed: usize,
    pub failed: Vec<usize>,
    pub max_final_purity_deviation: f64,
    pub max_charge_drift: f64,
    pub spectral_gap: Option<f64>,
    pub regularized_chern: Option<f64>,
    /// Set when regularization is undefined.
    pub regularize_error: Option<String>,
    /// `C_Ḡ(r)`, `r = 0..=L/2`.
    pub averaged_correlation: Vec<f64>,
    /// Trajectory mean of the final `C(r)` when recorded.
    pub trajectory_correlation: Option<Vec<f64>>,
}

fn mean_sem(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn ok_reports(ens: &EnsembleResult) -> Vec<&TrajectoryReport> {
    ens.trajectories.iter().filter(|t| t.error.is_none()).collect()
}

/// Per-cycle ensemble means.
pub fn series(ens: &EnsembleResult) -> Vec<SeriesRow> {
    let ok = ok_reports(ens);
    let Some(first) = ok.first() else { return Vec::new() };
    (0..first.records.len())
        .map(|i| {
            let pick = |f: &dyn Fn(&steer_core::protocol::CycleRecord) -> Option<f64>| -> Vec<f64> {
                ok.iter().filter_map(|t| t.records.get(i).and_then(f)).collect()
            };
            let mean = |v: Vec<f64>| (!v.is_empty()).then(|| mean_sem(&v).0);
            let chern = pick(&|r| r.chern);
            let (cm, cs) = if chern.is_empty() { (None, None) } else { let (m, s) = mean_sem(&chern); (Some(m), Some(s)) };
            let purity = pick(&|r| r.purity_deviation);
            SeriesRow {
                cycle: first.records[i].cycle,
                chern_mean: cm,
                chern_sem: cs,
                mutual_information_mean: mean(pick(&|r| r.mutual_information)),
                purity_deviation_max: (!purity.is_empty()).then(|| purity.iter().copied().fold(0.0, f64::max)),
                lower_occupation_mean: mean(pick(&|r| r.lower_occupation)),
                upper_occupation_mean: mean(pick(&|r| r.upper_occupation)),
            }
        })
        .collect()
}

fn summarize(ens: &EnsembleResult, lattice: &Lattice, stride: usize) -> EnsembleSummary {
    let ok = ok_reports(ens);
    let failed: Vec<usize> = ens.trajectories.iter().filter(|t| t.error.is_some()).map(|t| t.index).collect();
    let radius = TRIPLE_RADIUS_FRACTION * lattice.l as f64;
    let (gap, reg, reg_err) = if ens.completed == 0 {
        (None, None, Some("no completed trajectories".to_string()))
    } else {
        match regularize(&ens.mean_g).and_then(|r| chern_strided(&r, lattice, radius, stride)) {
            Ok(c) => (spectral_gap(&ens.mean_g).ok(), Some(c), None),
            Err(e) => (None, None, Some(e.to_string())),
        }
    };
    let trajectory_correlation = {
        let finals: Vec<&Vec<f64>> = ok.iter().filter_map(|t| t.records.last().and_then(|r| r.correlation.as_ref())).collect();
        (!finals.is_empty()).then(|| {
            let mut acc = vec![0.0; finals[0].len()];
            for c in &finals {
                for (a, v) in acc.iter_mut().zip(c.iter()) {
                    *a += v / finals.len() as f64;
                }
            }
            acc
        })
    };
    EnsembleSummary {
        completed: ens.completed,
        failed,
        max_final_purity_deviation: ok.iter().map(|t| t.final_purity_deviation).fold(0.0, f64::max),
        max_charge_drift: ens.trajectories.iter().map(|t| t.charge_drift).fold(0.0, f64::max),
        spectral_gap: gap,
        regularized_chern: reg,
        regularize_error: reg_err,
        averaged_correlation: if ens.completed > 0 { correlation_decay(&ens.mean_g, lattice) } else { Vec::new() },
        trajectory_correlation,
    }
}

fn trajectory_summaries(ens: &EnsembleResult) -> Vec<TrajectorySummary> {
    ens.trajectories
        .iter()
        .map(|t| TrajectorySummary {
            index: t.index,
            seed: t.seed,
            final_chern: t.records.last().and_then(|r| r.chern),
            charge_drift: t.charge_drift,
            final_purity_deviation: t.final_purity_deviation,
            error: t.error.clone(),
        })
        .collect()
}

fn series_table(name: &str, key: Option<(&str, f64)>, rows: &[SeriesRow], table: Option<Table>) -> Table {
    let mut header = vec!["cycle", "chern_mean", "chern_sem", "mutual_information_mean", "purity_deviation_max", "lower_occupation_mean", "upper_occupation_mean"];
    if let Some((k, _)) = key {
        header.insert(0, k);
    }
    let mut t = table.unwrap_or_else(|| Table::new(name, &header));
    for r in rows {
        let mut row = vec![
            r.cycle.to_string(),
            num(r.chern_mean),
            num(r.chern_sem),
            num(r.mutual_information_mean),
            num(r.purity_deviation_max),
            num(r.lower_occupation_mean),
            num(r.upper_occupation_mean),
        ];
        if let Some((_, v)) = key {
            row.insert(0, num(Some(v)));
        }
        t.push(row);
    }
    t
}

fn records_table(name: &str, key: Option<(&str, f64)>, ens: &EnsembleResult, table: Option<Table>) -> Table {
    let mut header = vec!["trajectory", "cycle", "chern", "mutual_information", "purity_deviation", "charge_physical", "charge_total", "mismatches", "transfers"];
    if let Some((k, _)) = key {
        header.insert(0, k);
    }
    let mut t = table.unwrap_or_else(|| Table::new(name, &header));
    for tr in &ens.trajectories {
        for r in &tr.records {
            let mut row = vec![
                tr.index.to_string(),
                r.cycle.to_string(),
                num(r.chern),
                num(r.mutual_information),
                num(r.purity_deviation),
                num(Some(r.charge_physical)),
                num(Some(r.charge_total)),
                r.mismatches.to_string(),
                r.transfers.to_string(),
            ];
            if let Some((_, v)) = key {
                row.insert(0, num(Some(v)));
            }
            t.push(row);
        }
    }
    t
}

fn correlation_table(name: &str, key: Option<(&str, f64)>, l: usize, s: &EnsembleSummary, table: Option<Table>) -> Table {
    let mut header = vec!["r", "chord", "trajectory_mean", "averaged"];
    if let Some((k, _)) = key {
        header.insert(0, k);
    }
    let mut t = table.unwrap_or_else(|| Table::new(name, &header));
    for (r, c) in s.averaged_correlation.iter().enumerate() {
        let traj = s.trajectory_correlation.as_ref().and_then(|v| v.get(r).copied());
        let mut row = vec![r.to_string(), num(Some(chord_distance(l, r as f64))), num(traj), num(Some(*c))];
        if let Some((_, v)) = key {
            row.insert(0, num(Some(v)));
        }
        t.push(row);
    }
    t
}

fn run_protocol(cfg: &RunConfig, alpha: AlphaField, sigma: f64, schedule: &Schedule) -> Result<(ProtocolConfig, EnsembleResult)> {
    let pc = cfg.protocol(alpha, sigma)?;
    let modes = pc.build_modes().context("building OW modes")?;
    let ens = run_ensemble(&pc, &modes, schedule).context("running ensemble")?;
    Ok((pc, ens))
}

/// `steer` result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteerResult {
    pub series: Vec<SeriesRow>,
    pub ensemble: EnsembleSummary,
    /// Integer the final mean Chern number rounds to.
    pub target_chern: f64,
    /// Fit of `ln |C̄(t) − target|` against cycle over [`APPROACH_WINDOW`].
    pub approach_fit: Option<LineFit>,
    pub trajectories: Vec<TrajectorySummary>,
}

/// Log-linear fit of the distance of a series to `target` over `window`.
pub fn approach_fit(series: &[SeriesRow], target: f64, window: [usize; 2]) -> Option<LineFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = series
        .iter()
        .filter(|r| (window[0]..=window[1]).contains(&r.cycle))
        .filter_map(|r| r.chern_mean.map(|c| (r.cycle as f64, (c - target).abs().max(1e-300).ln())))
        .unzip();
    fit_line(&x, &y).ok()
}

pub fn steer(cfg: &RunConfig) -> Result<(SteerResult, Vec<Table>)> {
    let schedule = Schedule::from(&cfg.schedule);
    let (pc, ens) = run_protocol(cfg, cfg.alpha_field(), cfg.noise_sigma, &schedule)?;
    let rows = series(&ens);
    let target = rows.last().and_then(|r| r.chern_mean).map(f64::round).unwrap_or(0.0);
    let summary = summarize(&ens, &pc.lattice, cfg.schedule.chern_stride);
    let tables = vec![
        series_table("series", None, &rows, None),
        records_table("trajectories", None, &ens, None),
        correlation_table("correlation", None, pc.lattice.l, &summary, None),
    ];
    let result = SteerResult {
        approach_fit: approach_fit(&rows, target, APPROACH_WINDOW),
        target_chern: target,
        ensemble: summary,
        series: rows,
        trajectories: trajectory_summaries(&ens),
    };
    Ok((result, tables))
}

/// One α of an α-sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaRow {
    pub alpha: f64,
    pub final_chern_mean: Option<f64>,
    pub final_chern_sem: Option<f64>,
    pub final_mutual_information: Option<f64>,
    /// Exponential fit of the trajectory-mean `C(r)` over the exponential window.
    pub exp_fit: Option<LineFit>,
    /// Exponential and chord log-log fits over the AIC window.
    pub aic_exp_fit: Option<LineFit>,
    pub aic_power_fit: Option<LineFit>,
    pub power_law_preferred: Option<bool>,
    pub series: Vec<SeriesRow>,
    pub ensemble: EnsembleSummary,
}

/// `alpha-sweep` result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaSweepResult {
    pub exp_window: [usize; 2],
    pub aic_window: [usize; 2],
    pub rows: Vec<AlphaRow>,
}

pub fn alpha_sweep(cfg: &RunConfig) -> Result<(AlphaSweepResult, Vec<Table>)> {
    let l = cfg.l;
    let exp_window = cfg.alpha_sweep.exp_window.unwrap_or([2, l / 4]);
    let aic_window = cfg.alpha_sweep.aic_window.unwrap_or([1, l / 2]);
    let mut schedule = Schedule::from(&cfg.schedule);
    schedule.mutual_information = true;
    schedule.correlation = true;
    let mut rows = Vec::new();
    let (mut st, mut rt, mut ct) = (None, None, None);
    for &alpha in &cfg.alpha_sweep.alphas {
        let (pc, ens) = run_protocol(cfg, AlphaField::uniform(l, alpha), cfg.noise_sigma, &schedule)?;
        let s = series(&ens);
        let summary = summarize(&ens, &pc.lattice, cfg.schedule.chern_stride);
        let last = s.last();
        let (exp_fit, aic_exp_fit, aic_power_fit) = match &summary.trajectory_correlation {
            Some(c) => (
                fit_exponential(c, exp_window[0], exp_window[1]).ok(),
                fit_exponential(c, aic_window[0], aic_window[1]).ok(),
                fit_power_law(c, l, aic_window[0], aic_window[1]).ok(),
            ),
            None => (None, None, None),
        };
        let key = Some(("alpha", alpha));
        st = Some(series_table("series", key, &s, st));
        rt = Some(records_table("trajectories", key, &ens, rt));
        ct = Some(correlation_table("correlation", key, l, &summary, ct));
        rows.push(AlphaRow {
            alpha,
            final_chern_mean: last.and_then(|r| r.chern_mean),
            final_chern_sem: last.and_then(|r| r.chern_sem),
            final_mutual_information: last.and_then(|r| r.mutual_information_mean),
            power_law_preferred: aic_exp_fit.zip(aic_power_fit).map(|(e, p)| p.aic < e.aic),
            exp_fit,
            aic_exp_fit,
            aic_power_fit,
            series: s,
            ensemble: summary,
        });
    }
    let mut sweep = Table::new("sweep", &["alpha", "final_chern_mean", "final_chern_sem", "final_mutual_information", "exp_r2", "aic_exp", "aic_power", "spectral_gap", "regularized_chern"]);
    for r in &rows {
        sweep.push(vec![
            num(Some(r.alpha)),
            num(r.final_chern_mean),
            num(r.final_chern_sem),
            num(r.final_mutual_information),
            num(r.exp_fit.map(|f| f.r2)),
            num(r.aic_exp_fit.map(|f| f.aic)),
            num(r.aic_power_fit.map(|f| f.aic)),
            num(r.ensemble.spectral_gap),
            num(r.ensemble.regularized_chern),
        ]);
    }
    let tables = [Some(sweep), st, rt, ct].into_iter().flatten().collect();
    Ok((AlphaSweepResult { exp_window, aic_window, rows }, tables))
}

/// One σ of a noise sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseRow {
    pub sigma: f64,
    /// Trajectory-resolved mean Chern number at the final cycle.
    pub final_chern_mean: Option<f64>,
    pub final_chern_sem: Option<f64>,
    pub series: Vec<SeriesRow>,
    pub ensemble: EnsembleSummary,
}

/// `noise-sweep` result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSweepResult {
    pub rows: Vec<NoiseRow>,
}

pub fn noise_sweep(cfg: &RunConfig) -> Result<(NoiseSweepResult, Vec<Table>)> {
    let schedule = Schedule::from(&cfg.schedule);
    let mut rows = Vec::new();
    let (mut st, mut rt) = (None, None);
    for &sigma in &cfg.noise_sweep.sigmas {
        let (pc, ens) = run_protocol(cfg, cfg.alpha_field(), sigma, &schedule)?;
        let s = series(&ens);
        let key = Some(("sigma", sigma));
        st = Some(series_table("series", key, &s, st));
        rt = Some(records_table("trajectories", key, &ens, rt));
        rows.push(NoiseRow {
            sigma,
            final_chern_mean: s.last().and_then(|r| r.chern_mean),
            final_chern_sem: s.last().and_then(|r| r.chern_sem),
            ensemble: summarize(&ens, &pc.lattice, cfg.schedule.chern_stride),
            series: s,
        });
    }
    let mut sweep = Table::new("sweep", &["sigma", "final_chern_mean", "final_chern_sem", "spectral_gap", "regularized_chern"]);
    for r in &rows {
        sweep.push(vec![num(Some(r.sigma)), num(r.final_chern_mean), num(r.final_chern_sem), num(r.ensemble.spectral_gap), num(r.ensemble.regularized_chern)]);
    }
    Ok((NoiseSweepResult { rows }, [Some(sweep), st, rt].into_iter().flatten().collect()))
}

/// Row sets of the domain-wall geometry (inner region on rows `[L/4, 3L/4)`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WallGeometry {
    /// Marker seam origin; the seam lies on the lower wall.
    pub marker_origin: (usize, usize),
    /// Interior rows used for the bulk marker averages.
    pub inner_rows: Vec<usize>,
    pub outer_rows: Vec<usize>,
    /// Two-row strips straddling each wall.
    pub wall_strips: [Vec<usize>; 2],
    /// Two-row strips at the center of each bulk.
    pub inner_strip: Vec<usize>,
    pub outer_strip: Vec<usize>,
}

impl WallGeometry {
    pub fn new(l: usize) -> Self {
        let q = l / 4;
        let wrap = |y: isize| y.rem_euclid(l as isize) as usize;
        let rows = |lo: isize, hi: isize| (lo..=hi).map(wrap).collect::<Vec<_>>();
        let (q, h) = (q as isize, (l / 2) as isize);
        Self {
            marker_origin: (0, l / 4),
            inner_rows: rows(q + 2, 3 * q - 3),
            outer_rows: rows(3 * q + 2, l as isize + q - 3),
            wall_strips: [rows(q - 1, q), rows(3 * q - 1, 3 * q)],
            inner_strip: rows(h - 1, h),
            outer_strip: rows(-1, 0),
        }
    }
}

/// Strip and bulk averages at one cycle (trajectory means).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WallCycle {
    pub cycle: usize,
    pub marker_inner: f64,
    pub marker_outer: f64,
    pub contour_walls: [f64; 2],
    pub contour_inner: f64,
    pub contour_outer: f64,
}

/// Field snapshot (trajectory means) indexed by site `y L + x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WallSnapshot {
    pub cycle: usize,
    pub marker: Vec<f64>,
    pub marker_valid: Vec<bool>,
    pub contour: Vec<f64>,
}

/// Decay rates `−d ln s / dt` of the strip contours.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WallRates {
    pub window: [usize; 2],
    pub walls: [Option<f64>; 2],
    pub inner: Option<f64>,
    pub outer: Option<f64>,
}

/// `domain-wall` result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainWallResult {
    pub inner_alpha: f64,
    pub outer_alpha: f64,
    pub geometry: WallGeometry,
    pub cycles: Vec<WallCycle>,
    pub snapshots: Vec<WallSnapshot>,
    pub rates: WallRates,
    pub completed: usize,
    pub failed: Vec<usize>,
    pub errors: Vec<String>,
    pub max_final_purity_deviation: f64,
    /// A conservation check only for sharp-charge starts; the mixed start has
    /// no definite charge and single trajectories drift.
    pub max_charge_drift: f64,
}

struct WallTrajectory {
    cycles: Vec<WallCycle>,
    snapshots: Vec<WallSnapshot>,
    purity: f64,
    drift: f64,
}

fn wall_trajectory(pc: &ProtocolConfig, modes: &steer_core::chern::OwModeSet, geo: &WallGeometry, snaps: &[usize], index: usize) -> Result<WallTrajectory> {
    let lat = pc.lattice;
    let l = lat.l;
    let all: Vec<usize> = (0..lat.n_modes()).collect();
    let mut out = WallTrajectory { cycles: Vec::new(), snapshots: Vec::new(), purity: 0.0, drift: 0.0 };
    let mut q0 = None;
    let strip = |rows: &[usize], c: &[(usize, f64)]| -> f64 { c.iter().filter(|(s, _)| rows.contains(&(s / l))).map(|(_, v)| v).sum() };
    let state = run_trajectory_with(pc, modes, index, |s, _| {
        let q = s.total_charge();
        out.drift = out.drift.max((q - *q0.get_or_insert(q)).abs());
        let marker = chern_marker_with_origin(&s.phys, &lat, geo.marker_origin)?;
        let contour = entanglement_contour(&s.phys, &all);
        let inner = marker.mean_where(|_, y| geo.inner_rows.contains(&y)).unwrap_or(f64::NAN);
        let outer = marker.mean_where(|_, y| geo.outer_rows.contains(&y)).unwrap_or(f64::NAN);
        out.cycles.push(WallCycle {
            cycle: s.cycle,
            marker_inner: inner,
            marker_outer: outer,
            contour_walls: [strip(&geo.wall_strips[0], &contour), strip(&geo.wall_strips[1], &contour)],
            contour_inner: strip(&geo.inner_strip, &contour),
            contour_outer: strip(&geo.outer_strip, &contour),
        });
        if snaps.contains(&s.cycle) {
            let mut field = vec![0.0; l * l];
            for (site, v) in &contour {
                field[*site] = *v;
            }
            out.snapshots.push(WallSnapshot { cycle: s.cycle, marker: marker.values, marker_valid: marker.valid, contour: field });
        }
        Ok(())
    })?;
    out.purity = state.phys.purity_deviation();
    Ok(out)
}

fn decay_rate(cycles: &[WallCycle], window: [usize; 2], f: impl Fn(&WallCycle) -> f64) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) =
        cycles.iter().filter(|c| (window[0]..=window[1]).contains(&c.cycle)).map(|c| (c.cycle as f64, f(c).max(1e-300).ln())).unzip();
    fit_line(&x, &y).ok().map(|fit| -fit.slope)
}

pub fn domain_wall(cfg: &RunConfig) -> Result<(DomainWallResult, Vec<Table>)> {
    let pc = cfg.protocol(cfg.alpha_field(), cfg.noise_sigma)?;
    let modes = pc.build_modes().context("building OW modes")?;
    let geo = WallGeometry::new(cfg.l);
    let snaps = &cfg.domain_wall.snapshots;
    let indices: Vec<usize> = (0..pc.trajectories).collect();
    let mut done: Vec<WallTrajectory> = Vec::new();
    let mut failed = Vec::new();
    let mut errors = Vec::new();
    for chunk in indices.chunks(ENSEMBLE_CHUNK) {
        let batch: Vec<(usize, Result<WallTrajectory>)> = chunk.par_iter().map(|&i| (i, wall_trajectory(&pc, &modes, &geo, snaps, i))).collect();
        for (i, r) in batch {
            match r {
                Ok(t) => done.push(t),
                Err(e) => {
                    failed.push(i);
                    errors.push(format!("trajectory {i}: {e}"));
                }
            }
        }
    }
    let n = done.len().max(1) as f64;
    let mut cycles: Vec<WallCycle> = Vec::new();
    let mut snapshots: Vec<WallSnapshot> = Vec::new();
    if let Some(first) = done.first() {
        cycles = first.cycles.iter().map(|c| WallCycle { cycle: c.cycle, marker_inner: 0.0, marker_outer: 0.0, contour_walls: [0.0; 2], contour_inner: 0.0, contour_outer: 0.0 }).collect();
        snapshots = first
            .snapshots
            .iter()
            .map(|s| WallSnapshot { cycle: s.cycle, marker: vec![0.0; s.marker.len()], marker_valid: s.marker_valid.clone(), contour: vec![0.0; s.contour.len()] })
            .collect();
        for t in &done {
            for (acc, c) in cycles.iter_mut().zip(&t.cycles) {
                acc.marker_inner += c.marker_inner / n;
                acc.marker_outer += c.marker_outer / n;
                acc.contour_walls[0] += c.contour_walls[0] / n;
                acc.contour_walls[1] += c.contour_walls[1] / n;
                acc.contour_inner += c.contour_inner / n;
                acc.contour_outer += c.contour_outer / n;
            }
            for (acc, s) in snapshots.iter_mut().zip(&t.snapshots) {
                for (a, v) in acc.marker.iter_mut().zip(&s.marker) {
                    *a += v / n;
                }
                for (a, v) in acc.contour.iter_mut().zip(&s.contour) {
                    *a += v / n;
                }
            }
        }
    }
    let w = cfg.domain_wall.rate_window;
    let rates = WallRates {
        window: w,
        walls: [decay_rate(&cycles, w, |c| c.contour_walls[0]), decay_rate(&cycles, w, |c| c.contour_walls[1])],
        inner: decay_rate(&cycles, w, |c| c.contour_inner),
        outer: decay_rate(&cycles, w, |c| c.contour_outer),
    };
    let mut ct = Table::new("cycles", &["cycle", "marker_inner", "marker_outer", "contour_wall_lower", "contour_wall_upper", "contour_inner", "contour_outer"]);
    for c in &cycles {
        ct.push(vec![
            c.cycle.to_string(),
            num(Some(c.marker_inner)),
            num(Some(c.marker_outer)),
            num(Some(c.contour_walls[0])),
            num(Some(c.contour_walls[1])),
            num(Some(c.contour_inner)),
            num(Some(c.contour_outer)),
        ]);
    }
    let mut ft = Table::new("fields", &["cycle", "x", "y", "marker", "marker_valid", "contour"]);
    for s in &snapshots {
        for y in 0..cfg.l {
            for x in 0..cfg.l {
                let i = y * cfg.l + x;
                ft.push(vec![s.cycle.to_string(), x.to_string(), y.to_string(), num(Some(s.marker[i])), s.marker_valid[i].to_string(), num(Some(s.contour[i]))]);
            }
        }
    }
    let result = DomainWallResult {
        inner_alpha: cfg.domain_wall.inner,
        outer_alpha: cfg.domain_wall.outer,
        geometry: geo,
        cycles,
        snapshots,
        rates,
        completed: done.len(),
        max_final_purity_deviation: done.iter().map(|t| t.purity).fold(0.0, f64::max),
        max_charge_drift: done.iter().map(|t| t.drift).fold(0.0, f64::max),
        failed,
        errors,
    };
    Ok((result, vec![ct, ft]))
}

/// `lindblad` result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LindbladResult {
    pub alpha: f64,
    pub grid: usize,
    pub n_a: f64,
    pub t_conv: f64,
    pub t_conv_bound: f64,
    /// `(grid, T_conv)` on the configured grids.
    pub t_conv_grids: Vec<(usize, f64)>,
    pub max_bound_violation: f64,
    pub plus_decay_rate: Option<f64>,
    pub final_g_plus: f64,
    pub final_g_minus: f64,
    pub series: LindbladSeries,
}

pub fn lindblad(cfg: &RunConfig) -> Result<(LindbladResult, Vec<Table>)> {
    let lc = &cfg.lindblad;
    let params = LindbladParams { l: lc.grid, alpha: cfg.alpha, n_a: lc.n_a, dt: lc.dt, t_max: lc.t_max, record_every: lc.record_every };
    let [gp, gm, coh] = lc.initial;
    let init = BandOccupations::uniform(lc.grid * lc.grid, gp, gm, C64::new(coh, 0.0));
    let series = integrate(&params, &init)?;
    let t_conv_grids = lc
        .t_conv_grids
        .iter()
        .map(|&g| Ok((g, convergence_time(&Lattice::new(g)?, cfg.alpha)?)))
        .collect::<steer_core::Result<Vec<_>>>()?;
    let mut t = Table::new("lindblad", &["t", "g_plus_mean", "g_minus_mean", "max_coherence", "bound_plus", "bound_minus"]);
    for i in 0..series.t.len() {
        t.push(vec![
            num(Some(series.t[i])),
            num(Some(series.g_plus_mean[i])),
            num(Some(series.g_minus_mean[i])),
            num(Some(series.max_coherence[i])),
            num(Some(series.bound_plus[i])),
            num(Some(series.bound_minus[i])),
        ]);
    }
    let result = LindbladResult {
        alpha: cfg.alpha,
        grid: lc.grid,
        n_a: lc.n_a,
        t_conv: series.t_conv,
        t_conv_bound: series.t_conv_bound,
        t_conv_grids,
        max_bound_violation: series.max_bound_violation(),
        plus_decay_rate: series.plus_decay_rate().ok(),
        final_g_plus: *series.g_plus_mean.last().expect("t = 0 is recorded"),
        final_g_minus: *series.g_minus_mean.last().expect("t = 0 is recorded"),
        series,
    };
    Ok((result, vec![t]))
}

/// `symmetry` result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryResult {
    pub rows: Vec<CorrespondenceRow>,
    pub all_pass: bool,
}

pub fn symmetry(cfg: &RunConfig) -> Result<(SymmetryResult, Vec<Table>)> {
    let n = cfg.symmetry.n;
    let samples = cfg.symmetry.samples;
    let rows: Vec<CorrespondenceRow> = ClassLabel::ALL
        .par_iter()
        .enumerate()
        .map(|(i, &c)| verify_correspondence(c, n, samples, &mut RandomStream::new(steer_core::rng::trajectory_seed(cfg.seed, i as u64))))
        .collect::<steer_core::Result<_>>()?;
    let mut t = Table::new("symmetry", &["stm_class", "meo_class", "samples", "algebra_residual", "group_residual", "partner_max_residual", "partner_pass", "non_partner_failing", "non_partner_implied", "pass"]);
    for r in &rows {
        let fails = r.non_partner.iter().filter(|(_, s)| matches!(s, steer_core::symmetry::NonPartnerStatus::Fails { .. })).count();
        let implied = r.non_partner.iter().filter(|(_, s)| matches!(s, steer_core::symmetry::NonPartnerStatus::Implied)).count();
        t.push(vec![
            r.stm_class.name().into(),
            r.meo_class.name().into(),
            r.samples.to_string(),
            num(Some(r.algebra_max_residual)),
            num(Some(r.group_max_residual)),
            num(Some(r.partner_checks.iter().map(|p| p.max_residual).fold(0.0, f64::max))),
            r.partner_checks.iter().all(|p| p.pass).to_string(),
            fails.to_string(),
            implied.to_string(),
            r.pass.to_string(),
        ]);
    }
    let all_pass = rows.iter().all(|r| r.pass);
    Ok((SymmetryResult { rows, all_pass }, vec![t]))
}

/// One POVM construction check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionCheck {
    pub class: AdmissibleClass,
    pub alpha: f64,
    pub phi: f64,
    pub residual: f64,
    pub pass: bool,
}

/// `povm` result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PovmResult {
    pub constructions: Vec<ConstructionCheck>,
    pub witnesses: Vec<WitnessReport>,
    pub all_pass: bool,
}

pub fn povm(cfg: &RunConfig) -> Result<(PovmResult, Vec<Table>)> {
    let p = &cfg.povm;
    let mut constructions = Vec::new();
    for class in [AdmissibleClass::A, AdmissibleClass::AI, AdmissibleClass::BDI, AdmissibleClass::D] {
        for &alpha in &p.alphas {
            let residual = povm_check_construction(class, alpha, p.phi)?;
            constructions.push(ConstructionCheck { class, alpha, phi: p.phi, residual, pass: residual <= POVM_TOL });
        }
    }
    let witnesses: Vec<WitnessReport> = InadmissibleClass::ALL
        .par_iter()
        .enumerate()
        .map(|(i, &c)| {
            let modes = if c == InadmissibleClass::DIII { p.diii_modes } else { p.n_modes };
            let mut rng = RandomStream::new(steer_core::rng::trajectory_seed(cfg.seed, i as u64));
            povm_witness_inadmissible(c, modes, p.samples, p.scale, &mut rng)
        })
        .collect::<steer_core::Result<_>>()?;
    let mut ct = Table::new("constructions", &["class", "alpha", "phi", "residual", "pass"]);
    for c in &constructions {
        ct.push(vec![format!("{:?}", c.class), num(Some(c.alpha)), num(Some(c.phi)), num(Some(c.residual)), c.pass.to_string()]);
    }
    let mut wt = Table::new("witnesses", &["class", "n_modes", "samples", "skipped", "min_slack", "max_pairing_error", "max_degeneracy_error", "pass"]);
    for w in &witnesses {
        wt.push(vec![
            format!("{:?}", w.class),
            w.n_modes.to_string(),
            w.samples.to_string(),
            w.skipped.to_string(),
            num(Some(w.min_slack)),
            num(Some(w.max_pairing_error)),
            num(w.max_degeneracy_error),
            w.pass.to_string(),
        ]);
    }
    let all_pass = constructions.iter().all(|c| c.pass) && witnesses.iter().all(|w| w.pass);
    Ok((PovmResult { constructions, witnesses, all_pass }, vec![ct, wt]))
}

fn to_value<T: Serialize>(v: &T) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(v)?)
}

/// Runs the experiment of `kind`.
pub fn run_kind(kind: Kind, cfg: &RunConfig) -> Result<Outcome> {
    let single = |result, tables, completed| Outcome { result, tables, completed, failed: Vec::new(), errors: Vec::new() };
    Ok(match kind {
        Kind::Steer => {
            let (r, tables) = steer(cfg)?;
            let errors = r.trajectories.iter().filter_map(|t| t.error.as_ref().map(|e| format!("trajectory {}: {e}", t.index))).collect();
            Outcome { completed: r.ensemble.completed, failed: r.ensemble.failed.clone(), errors, result: to_value(&r)?, tables }
        }
        Kind::AlphaSweep => {
            let (r, tables) = alpha_sweep(cfg)?;
            let failed: Vec<usize> = r.rows.iter().flat_map(|x| x.ensemble.failed.clone()).collect();
            let completed = r.rows.iter().map(|x| x.ensemble.completed).sum();
            Outcome { completed, errors: failed.iter().map(|i| format!("trajectory {i} failed")).collect(), failed, result: to_value(&r)?, tables }
        }
        Kind::NoiseSweep => {
            let (r, tables) = noise_sweep(cfg)?;
            let failed: Vec<usize> = r.rows.iter().flat_map(|x| x.ensemble.failed.clone()).collect();
            let completed = r.rows.iter().map(|x| x.ensemble.completed).sum();
            Outcome { completed, errors: failed.iter().map(|i| format!("trajectory {i} failed")).collect(), failed, result: to_value(&r)?, tables }
        }
        Kind::DomainWall => {
            let (r, tables) = domain_wall(cfg)?;
            Outcome { completed: r.completed, failed: r.failed.clone(), errors: r.errors.clone(), result: to_value(&r)?, tables }
        }
        Kind::Lindblad => {
            let (r, tables) = lindblad(cfg)?;
            single(to_value(&r)?, tables, 0)
        }
        Kind::Symmetry => {
            let (r, tables) = symmetry(cfg)?;
            let mut o = single(to_value(&r)?, tables, 0);
            if !r.all_pass {
                o.errors.push("symmetry table check failed".into());
            }
            o
        }
        Kind::Povm => {
            let (r, tables) = povm(cfg)?;
            let mut o = single(to_value(&r)?, tables, 0);
            if !r.all_pass {
                o.errors.push("POVM check failed".into());
            }
            o
        }
        Kind::OracleSelftest => {
            let r = crate::selftest::selftest(cfg)?;
            let tables = vec![crate::selftest::table(&r)];
            let mut o = single(to_value(&r)?, tables, 0);
            o.errors = r.failures();
            o
        }
    })
}
