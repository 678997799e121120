//! Effective Lindbladian of the trajectory-averaged protocol, reduced to closed
//! equations for the band-resolved occupations on the momentum grid.
//!
//! With `γ_±(k) = Σ_ν |f_{ν,±}(k)|²`, `n̄` the mean ancillary occupation and
//! `<·>` the grid average:
//! * `ġ_+ = −2 γ_+ g_+ + (1 + n̄) Σ_ν |f_{ν,+}|² <|f_{ν,+}|² g_+>`
//! * `ġ_− = γ_− (n̄ − 2 g_−) + (2 − n̄) Σ_ν |f_{ν,−}|² <|f_{ν,−}|² g_−>`
//! * `α̇ = −(γ_+ + γ_−) α`

use serde::{Deserialize, Serialize};

use crate::chern::{form_factor_norm, orbital_weight, Band, Lattice, Orbital};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::observables::fit_line;

/// Densities outside `[−0.1, 1.1]` signal an unstable integration.
pub const UNSTABLE_MARGIN: f64 = 0.1;
/// Default step as a fraction of `1 / max γ`.
pub const DT_FRACTION: f64 = 0.01;

/// Form factors and dissipation rates on a momentum grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub l: usize,
    pub alpha: f64,
    /// `|f_{ν,n}(k)|²` indexed `[ν][n]` with `n = 0` lower, `1` upper; grid order of [`Lattice::momenta`].
    pub f2: [[Vec<f64>; 2]; 2],
    pub gamma_minus: Vec<f64>,
    pub gamma_plus: Vec<f64>,
}

impl Rates {
    pub fn new(lattice: &Lattice, alpha: f64) -> Result<Self> {
        let ks = lattice.momenta();
        let mut f2: [[Vec<f64>; 2]; 2] = Default::default();
        for o in Orbital::ALL {
            for (bi, b) in Band::ALL.iter().enumerate() {
                let z = form_factor_norm(lattice, alpha, o, *b)?;
                f2[o.index()][bi] = ks
                    .iter()
                    .map(|&(kx, ky)| orbital_weight(kx, ky, alpha, o, *b).map(|w| w / z))
                    .collect::<Result<_>>()?;
            }
        }
        let n = ks.len();
        let gamma_minus = (0..n).map(|i| f2[0][0][i] + f2[1][0][i]).collect();
        let gamma_plus = (0..n).map(|i| f2[0][1][i] + f2[1][1][i]).collect();
        Ok(Self { l: lattice.l, alpha, f2, gamma_minus, gamma_plus })
    }

    /// `δ_− = min_k γ_−`.
    pub fn delta_minus(&self) -> f64 {
        self.gamma_minus.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `δ_+ = min_k γ_+`.
    pub fn delta_plus(&self) -> f64 {
        self.gamma_plus.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_gamma(&self) -> f64 {
        self.gamma_minus.iter().chain(&self.gamma_plus).copied().fold(0.0, f64::max)
    }
}

/// `g_±(k)` and the interband coherence `α(k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandOccupations {
    pub g_plus: Vec<f64>,
    pub g_minus: Vec<f64>,
    pub coherence: Vec<C64>,
}

impl BandOccupations {
    /// Uniform `g_± = g`, `α = a`.
    pub fn uniform(n: usize, g_plus: f64, g_minus: f64, coherence: C64) -> Self {
        Self { g_plus: vec![g_plus; n], g_minus: vec![g_minus; n], coherence: vec![coherence; n] }
    }

    fn axpy(&self, h: f64, d: &BandOccupations) -> BandOccupations {
        BandOccupations {
            g_plus: self.g_plus.iter().zip(&d.g_plus).map(|(a, b)| a + h * b).collect(),
            g_minus: self.g_minus.iter().zip(&d.g_minus).map(|(a, b)| a + h * b).collect(),
            coherence: self.coherence.iter().zip(&d.coherence).map(|(a, b)| a + b * h).collect(),
        }
    }

    pub fn mean_plus(&self) -> f64 {
        self.g_plus.iter().sum::<f64>() / self.g_plus.len() as f64
    }

    pub fn mean_minus(&self) -> f64 {
        self.g_minus.iter().sum::<f64>() / self.g_minus.len() as f64
    }

    pub fn max_coherence(&self) -> f64 {
        self.coherence.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Time derivatives of all components.
pub fn eom_rhs(state: &BandOccupations, rates: &Rates, n_a: f64) -> Result<BandOccupations> {
    let n = rates.gamma_plus.len();
    if state.g_plus.len() != n || state.g_minus.len() != n || state.coherence.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: state.g_plus.len() });
    }
    let avg = |w: &[f64], g: &[f64]| w.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() / n as f64;
    let ip = [avg(&rates.f2[0][1], &state.g_plus), avg(&rates.f2[1][1], &state.g_plus)];
    let im = [avg(&rates.f2[0][0], &state.g_minus), avg(&rates.f2[1][0], &state.g_minus)];
    let mut out = BandOccupations::uniform(n, 0.0, 0.0, C64::new(0.0, 0.0));
    for k in 0..n {
        let gp = rates.gamma_plus[k];
        let gm = rates.gamma_minus[k];
        out.g_plus[k] = -2.0 * gp * state.g_plus[k] + (1.0 + n_a) * (rates.f2[0][1][k] * ip[0] + rates.f2[1][1][k] * ip[1]);
        out.g_minus[k] = gm * (n_a - 2.0 * state.g_minus[k]) + (2.0 - n_a) * (rates.f2[0][0][k] * im[0] + rates.f2[1][0][k] * im[1]);
        out.coherence[k] = -state.coherence[k] * (gp + gm);
    }
    Ok(out)
}

/// Integration parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LindbladParams {
    pub l: usize,
    pub alpha: f64,
    pub n_a: f64,
    /// Step; defaults to `0.01 / max γ`.
    pub dt: Option<f64>,
    /// Final time; defaults to ten times the larger of `T_conv` and the bound-based time.
    pub t_max: Option<f64>,
    /// Store every this many steps.
    pub record_every: usize,
}

impl LindbladParams {
    pub fn new(l: usize, alpha: f64, n_a: f64) -> Self {
        Self { l, alpha, n_a, dt: None, t_max: None, record_every: 10 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.n_a) {
            return Err(Error::Invalid(format!("ancillary occupation {} outside [0, 1]", self.n_a)));
        }
        if self.dt.is_some_and(|d| !(d > 0.0)) || self.t_max.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::Invalid("dt and t_max must be positive".into()));
        }
        Ok(())
    }
}

/// Integrated k-averaged densities with the analytic bounds alongside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LindbladSeries {
    pub t: Vec<f64>,
    pub g_plus_mean: Vec<f64>,
    pub g_minus_mean: Vec<f64>,
    pub max_coherence: Vec<f64>,
    /// `ḡ_+(0) e^{−(1−n̄) δ_+ t}`.
    pub bound_plus: Vec<f64>,
    /// `|ḡ_−(0) − 1| e^{−n̄ δ_− t}`.
    pub bound_minus: Vec<f64>,
    pub delta_plus: f64,
    pub delta_minus: f64,
    pub t_conv: f64,
    pub t_conv_bound: f64,
    pub dt: f64,
    pub final_state: BandOccupations,
}

impl LindbladSeries {
    /// Largest violation `max(ḡ_+ − bound_+, |ḡ_− − 1| − bound_−)` (≤ 0 when bounds hold).
    pub fn max_bound_violation(&self) -> f64 {
        let mut v = f64::NEG_INFINITY;
        for i in 0..self.t.len() {
            v = v.max(self.g_plus_mean[i] - self.bound_plus[i]);
            v = v.max((self.g_minus_mean[i] - 1.0).abs() - self.bound_minus[i]);
        }
        v
    }

    /// Decay rate of `ḡ_+` from a log-linear fit over the window where it lies in
    /// `[ḡ_+(0) e^{−6}, ḡ_+(0) e^{−1}]`.
    pub fn plus_decay_rate(&self) -> Result<f64> {
        let g0 = self.g_plus_mean[0];
        let (hi, lo) = (g0 * (-1.0f64).exp(), g0 * (-6.0f64).exp());
        let (x, y): (Vec<f64>, Vec<f64>) = self
            .t
            .iter()
            .zip(&self.g_plus_mean)
            .filter(|(_, &g)| g <= hi && g >= lo)
            .map(|(&t, &g)| (t, g.ln()))
            .unzip();
        Ok(-fit_line(&x, &y)?.slope)
    }
}

/// `T_conv = 1 / min_{n,k} γ_n(k)`.
pub fn convergence_time(lattice: &Lattice, alpha: f64) -> Result<f64> {
    let r = Rates::new(lattice, alpha)?;
    Ok(1.0 / r.delta_plus().min(r.delta_minus()))
}

/// Bound-based time `1 / min[(1 − n̄) δ_+, n̄ δ_−]`.
pub fn convergence_time_bound(rates: &Rates, n_a: f64) -> f64 {
    1.0 / ((1.0 - n_a) * rates.delta_plus()).min(n_a * rates.delta_minus())
}

/// RK4 integration from `initial`.
pub fn integrate(params: &LindbladParams, initial: &BandOccupations) -> Result<LindbladSeries> {
    params.validate()?;
    let lattice = Lattice::new(params.l)?;
    let rates = Rates::new(&lattice, params.alpha)?;
    let t_conv = 1.0 / rates.delta_plus().min(rates.delta_minus());
    let dt = params.dt.unwrap_or(DT_FRACTION / rates.max_gamma());
    let t_conv_bound = convergence_time_bound(&rates, params.n_a);
    let horizon = if t_conv_bound.is_finite() { t_conv_bound.max(t_conv) } else { t_conv };
    let t_max = params.t_max.unwrap_or(10.0 * horizon);
    let steps = (t_max / dt).ceil() as usize;
    let every = params.record_every.max(1);
    let (dp, dm) = (rates.delta_plus(), rates.delta_minus());
    let mut s = initial.clone();
    let gp0 = s.mean_plus();
    let gm0 = (s.mean_minus() - 1.0).abs();
    let mut series = LindbladSeries {
        t: Vec::new(),
        g_plus_mean: Vec::new(),
        g_minus_mean: Vec::new(),
        max_coherence: Vec::new(),
        bound_plus: Vec::new(),
        bound_minus: Vec::new(),
        delta_plus: dp,
        delta_minus: dm,
        t_conv,
        t_conv_bound,
        dt,
        final_state: s.clone(),
    };
    let record = |t: f64, s: &BandOccupations, series: &mut LindbladSeries| {
        series.t.push(t);
        series.g_plus_mean.push(s.mean_plus());
        series.g_minus_mean.push(s.mean_minus());
        series.max_coherence.push(s.max_coherence());
        series.bound_plus.push(gp0 * (-(1.0 - params.n_a) * dp * t).exp());
        series.bound_minus.push(gm0 * (-params.n_a * dm * t).exp());
    };
    record(0.0, &s, &mut series);
    for step in 1..=steps {
        let k1 = eom_rhs(&s, &rates, params.n_a)?;
        let k2 = eom_rhs(&s.axpy(dt / 2.0, &k1), &rates, params.n_a)?;
        let k3 = eom_rhs(&s.axpy(dt / 2.0, &k2), &rates, params.n_a)?;
        let k4 = eom_rhs(&s.axpy(dt, &k3), &rates, params.n_a)?;
        s = s.axpy(dt / 6.0, &k1).axpy(dt / 3.0, &k2).axpy(dt / 3.0, &k3).axpy(dt / 6.0, &k4);
        let t = step as f64 * dt;
        if let Some(&v) = s.g_plus.iter().chain(&s.g_minus).find(|v| !(-UNSTABLE_MARGIN..=1.0 + UNSTABLE_MARGIN).contains(*v)) {
            return Err(Error::Unstable { value: v, t });
        }
        if step % every == 0 || step == steps {
            record(t, &s, &mut series);
        }
    }
    series.final_state = s;
    Ok(series)
}
