//! Self-test: correlation-matrix updates against the Fock-space oracle, the
//! symmetry table and the POVM checks, plus an injected-fault sentinel that
//! must be caught by the oracle battery.

use anyhow::Result;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use steer_core::fock::{correlation_of, evolve_gaussian, mode_number, FockState, ManyBodyOperator};
use steer_core::gaussian::{CorrelationMatrix, ModeVector, SingleParticleUnitary};
use steer_core::linalg::{expm, max_diff, CMat, CVec, C64};
use steer_core::rng::{trajectory_seed, RandomStream};

use crate::config::RunConfig;
use crate::report::{num, Table};

/// Agreement tolerance of the oracle battery.
pub const ORACLE_TOL: f64 = 1e-10;
/// Outcomes rarer than this are skipped (the update divides by the probability).
pub const MIN_P: f64 = 1e-6;
/// Reproduction seeds kept per operation.
const MAX_REPORTED: usize = 5;

/// The fSWAP implementation under test.
pub type FswapFn = fn(&mut CorrelationMatrix, &ModeVector, &ModeVector) -> steer_core::Result<()>;

/// Operations covered by the battery.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Op {
    ApplyUnitary,
    Measure,
    MeasureWeak,
    Fswap,
}

impl Op {
    pub const ALL: [Op; 4] = [Op::ApplyUnitary, Op::Measure, Op::MeasureWeak, Op::Fswap];
}

/// A failing case with its reproduction seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseFailure {
    pub seed: u64,
    pub n_modes: usize,
    pub error: f64,
}

/// Battery result of one operation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpReport {
    pub op: Op,
    pub cases: usize,
    pub max_error: f64,
    pub failed: usize,
    pub failures: Vec<CaseFailure>,
}

/// Full self-test result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub oracle: Vec<OpReport>,
    pub symmetry_pass: bool,
    pub povm_pass: bool,
    /// Largest fSWAP disagreement of the injected fault; `None` when disabled.
    pub sentinel_error: Option<f64>,
    pub sentinel_detected: Option<bool>,
    pub pass: bool,
}

impl SelftestReport {
    /// Human-readable failures with reproduction seeds.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for r in &self.oracle {
            for f in &r.failures {
                out.push(format!("{:?} disagrees with the oracle: seed {} on {} modes, error {:.3e}", r.op, f.seed, f.n_modes, f.error));
            }
        }
        if !self.symmetry_pass {
            out.push("symmetry table check failed".into());
        }
        if !self.povm_pass {
            out.push("POVM check failed".into());
        }
        if self.sentinel_detected == Some(false) {
            out.push("injected fSWAP sign error was not detected".into());
        }
        out
    }
}

fn complex_normal(rng: &mut RandomStream) -> C64 {
    C64::new(rng.normal(), rng.normal())
}

fn random_hermitian(n: usize, rng: &mut RandomStream) -> CMat {
    let a = CMat::from_fn(n, n, |_, _| complex_normal(rng));
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

fn random_mode(n: usize, rng: &mut RandomStream) -> steer_core::Result<ModeVector> {
    ModeVector::normalized(CVec::from_fn(n, |_, _| complex_normal(rng)))
}

fn random_state(n: usize, rng: &mut RandomStream) -> steer_core::Result<FockState> {
    let occ: Vec<u8> = (0..n).map(|_| u8::from(rng.uniform() < 0.5)).collect();
    let m = random_hermitian(n, rng) * C64::new(0.0, 1.0);
    evolve_gaussian(&FockState::basis(&occ)?, &m)?.normalized()
}

/// Largest disagreement of one randomized case.
fn case_error(op: Op, seed: u64, n: usize, fswap: FswapFn) -> steer_core::Result<f64> {
    let mut rng = RandomStream::new(seed);
    let psi = random_state(n, &mut rng)?;
    let g = correlation_of(&psi)?;
    let one = C64::new(1.0, 0.0);
    match op {
        Op::ApplyUnitary => {
            let m = random_hermitian(n, &mut rng) * C64::new(0.0, 1.0);
            let exact = correlation_of(&evolve_gaussian(&psi, &m)?)?;
            let mut h = g;
            h.apply_unitary(&SingleParticleUnitary::full(expm(&(-&m)))?)?;
            Ok(max_diff(h.matrix(), exact.matrix()))
        }
        Op::Measure => {
            let w = random_mode(n, &mut rng)?;
            let num_op = mode_number(n, w.amps())?;
            let hole = ManyBodyOperator::identity(n)?.add(&num_op.scale(-one));
            let mut err = 0.0f64;
            for (outcome, op) in [(1u8, &num_op), (0u8, &hole)] {
                let post = psi.apply(op)?;
                let prob = post.norm().powi(2);
                if prob < MIN_P {
                    continue;
                }
                let exact = correlation_of(&post.normalized()?)?;
                let mut h = g.clone();
                let p = h.project(&w, outcome)?;
                let born = if outcome == 1 { p } else { 1.0 - p };
                err = err.max((born - prob).abs()).max(max_diff(h.matrix(), exact.matrix()));
            }
            Ok(err)
        }
        Op::MeasureWeak => {
            let w = random_mode(n, &mut rng)?;
            let kappa = 0.01 + 2.99 * rng.uniform();
            let shifted = mode_number(n, w.amps())?.add(&ManyBodyOperator::identity(n)?.scale(C64::new(-0.5, 0.0)));
            let norm = C64::new(1.0 / (2.0 * kappa.cosh()).sqrt(), 0.0);
            let mut err = 0.0f64;
            for m in [1i8, -1] {
                let k = shifted.scale(C64::new(f64::from(m) * kappa, 0.0)).exp().scale(norm);
                let post = psi.apply(&k)?;
                let prob = post.norm().powi(2);
                if prob < MIN_P {
                    continue;
                }
                let exact = correlation_of(&post.normalized()?)?;
                let mut h = g.clone();
                err = err.max((h.weak_probability(&w, kappa, m)? - prob).abs());
                h.weak_update(&w, kappa, m)?;
                err = err.max(max_diff(h.matrix(), exact.matrix()));
            }
            Ok(err)
        }
        Op::Fswap => {
            let a = random_mode(n, &mut rng)?;
            let b = CVec::from_fn(n, |_, _| complex_normal(&mut rng));
            let b = ModeVector::normalized(&b - a.amps() * a.amps().dotc(&b))?;
            let v = (a.amps() - b.amps()) * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            let u = mode_number(n, &v)?.scale(C64::new(0.0, std::f64::consts::PI)).exp();
            let exact = correlation_of(&psi.apply(&u)?)?;
            let mut h = g;
            fswap(&mut h, &a, &b)?;
            Ok(max_diff(h.matrix(), exact.matrix()))
        }
    }
}

/// Runs `cases` randomized cases of `op` on 2–4 modes.
pub fn run_op(op: Op, cases: usize, master: u64, fswap: FswapFn) -> OpReport {
    let salt = Op::ALL.iter().position(|&o| o == op).unwrap_or(0) as u64;
    let errors: Vec<(u64, usize, f64)> = (0..cases)
        .into_par_iter()
        .map(|i| {
            let seed = trajectory_seed(master ^ (salt << 56), i as u64);
            let n = 2 + i % 3;
            (seed, n, case_error(op, seed, n, fswap).unwrap_or(f64::INFINITY))
        })
        .collect();
    let bad: Vec<&(u64, usize, f64)> = errors.iter().filter(|e| !(e.2 <= ORACLE_TOL)).collect();
    OpReport {
        op,
        cases,
        max_error: errors.iter().map(|e| e.2).fold(0.0, f64::max),
        failed: bad.len(),
        failures: bad.iter().take(MAX_REPORTED).map(|&&(seed, n_modes, error)| CaseFailure { seed, n_modes, error }).collect(),
    }
}

/// The production fSWAP.
pub fn fswap_ok(g: &mut CorrelationMatrix, a: &ModeVector, b: &ModeVector) -> steer_core::Result<()> {
    g.fswap(a, b)
}

/// fSWAP with an injected sign error: rotates about `(w_a + w_b)/√2`.
pub fn fswap_sign_error(g: &mut CorrelationMatrix, a: &ModeVector, b: &ModeVector) -> steer_core::Result<()> {
    g.fswap(a, &ModeVector::new(-b.amps())?)
}

pub fn selftest(cfg: &RunConfig) -> Result<SelftestReport> {
    let cases = cfg.selftest.cases;
    let oracle: Vec<OpReport> = Op::ALL.iter().map(|&op| run_op(op, cases, cfg.seed, fswap_ok)).collect();
    let (sym, _) = crate::experiments::symmetry(cfg)?;
    let (povm, _) = crate::experiments::povm(cfg)?;
    let sentinel = cfg.selftest.sentinel.then(|| run_op(Op::Fswap, cases.min(200), cfg.seed, fswap_sign_error));
    let sentinel_detected = sentinel.as_ref().map(|s| s.failed > 0);
    let pass = oracle.iter().all(|r| r.failed == 0) && sym.all_pass && povm.all_pass && sentinel_detected != Some(false);
    Ok(SelftestReport {
        oracle,
        symmetry_pass: sym.all_pass,
        povm_pass: povm.all_pass,
        sentinel_error: sentinel.map(|s| s.max_error),
        sentinel_detected,
        pass,
    })
}

/// Per-operation CSV rows.
pub fn table(r: &SelftestReport) -> Table {
    let mut t = Table::new("oracle", &["op", "cases", "max_error", "failed"]);
    for o in &r.oracle {
        t.push(vec![format!("{:?}", o.op), o.cases.to_string(), num(Some(o.max_error)), o.failed.to_string()]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn battery_passes_and_sentinel_is_caught() {
        for op in Op::ALL {
            let r = run_op(op, 60, 9, fswap_ok);
            assert_eq!(r.failed, 0, "{op:?}: {:e}", r.max_error);
        }
        let r = run_op(Op::Fswap, 60, 9, fswap_sign_error);
        assert!(r.failed > 0 && r.max_error > 1e-3);
        assert!(r.failures.len() <= MAX_REPORTED);
    }
}
