//! Run configuration: TOML input, defaults, validation and the JSON schema.

use std::path::{Path, PathBuf};

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use steer_core::chern::{AlphaField, Lattice};
use steer_core::protocol::{InitialState, ProtocolConfig, Schedule, DEFAULT_CLAMP_EVERY};

/// Lattice size, shell and ensemble size used by `--paper-scale`.
pub const PAPER_SCALE: (usize, usize, usize) = (20, 5, 100);

/// Configuration errors.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config field `{field}`: {message}")]
    Field { field: String, message: String },
}

fn field(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { field: field.into(), message: message.into() }
}

/// Experiment kinds; each maps to one subcommand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Steer,
    AlphaSweep,
    NoiseSweep,
    DomainWall,
    Lindblad,
    Symmetry,
    Povm,
    OracleSelftest,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Steer => "steer",
            Kind::AlphaSweep => "alpha-sweep",
            Kind::NoiseSweep => "noise-sweep",
            Kind::DomainWall => "domain-wall",
            Kind::Lindblad => "lindblad",
            Kind::Symmetry => "symmetry",
            Kind::Povm => "povm",
            Kind::OracleSelftest => "oracle-selftest",
        }
    }

    /// Kinds that run the measurement protocol.
    pub fn is_protocol(self) -> bool {
        matches!(self, Kind::Steer | Kind::AlphaSweep | Kind::NoiseSweep | Kind::DomainWall)
    }
}

/// Initial state of both layers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case")]
pub enum Initial {
    #[default]
    RandomProduct,
    MaximallyMixed,
}

impl From<Initial> for InitialState {
    fn from(v: Initial) -> Self {
        match v {
            Initial::RandomProduct => InitialState::RandomProduct,
            Initial::MaximallyMixed => InitialState::MaximallyMixed,
        }
    }
}

/// Which observables to record per cycle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    /// Record every this many cycles; the final cycle is always recorded.
    pub every: usize,
    pub chern: bool,
    /// Stride between triple-region centers of the self-averaged Chern number.
    pub chern_stride: usize,
    pub mutual_information: bool,
    pub purity: bool,
    pub correlation: bool,
    pub occupations: bool,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self { every: 1, chern: true, chern_stride: 1, mutual_information: false, purity: true, correlation: false, occupations: false }
    }
}

impl From<&ScheduleConfig> for Schedule {
    fn from(s: &ScheduleConfig) -> Self {
        Schedule {
            every: s.every,
            chern: s.chern,
            chern_stride: s.chern_stride,
            mutual_information: s.mutual_information,
            purity: s.purity,
            correlation: s.correlation,
            occupations: s.occupations,
        }
    }
}

/// `alpha-sweep` options.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct AlphaSweepConfig {
    pub alphas: Vec<f64>,
    /// Exponential-fit window `[r_lo, r_hi]`; defaults to `[2, L/4]`.
    pub exp_window: Option<[usize; 2]>,
    /// Window of the exponential-vs-power-law AIC comparison; defaults to `[1, L/2]`.
    pub aic_window: Option<[usize; 2]>,
}

impl Default for AlphaSweepConfig {
    fn default() -> Self {
        Self { alphas: (0..=10).map(|i| 1.5 + 0.1 * i as f64).collect(), exp_window: None, aic_window: None }
    }
}

/// `noise-sweep` options.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSweepConfig {
    pub sigmas: Vec<f64>,
}

impl Default for NoiseSweepConfig {
    fn default() -> Self {
        Self { sigmas: (0..=10).map(|i| 0.1 * i as f64).collect() }
    }
}

/// `domain-wall` options.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct DomainWallConfig {
    /// `α` on rows `[L/4, 3L/4)`.
    pub inner: f64,
    /// `α` elsewhere.
    pub outer: f64,
    /// Cycles at which marker and contour fields are written.
    pub snapshots: Vec<usize>,
    /// Cycle window of the contour decay-rate fits.
    pub rate_window: [usize; 2],
    /// Initial state; the maximally mixed start makes the contour measure
    /// entanglement with an implicit purifying reference.
    pub initial: Initial,
}

impl Default for DomainWallConfig {
    fn default() -> Self {
        Self { inner: 1.0, outer: 3.0, snapshots: vec![0, 2, 4, 6, 8, 10], rate_window: [4, 10], initial: Initial::MaximallyMixed }
    }
}

/// `lindblad` options; `α` is the top-level value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct LindbladConfig {
    /// Momentum grid size.
    pub grid: usize,
    /// Mean ancillary occupation.
    pub n_a: f64,
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
    pub record_every: usize,
    /// Initial uniform `g_+`, `g_−` and real coherence.
    pub initial: [f64; 3],
    /// Grids on which `T_conv` is also reported.
    pub t_conv_grids: Vec<usize>,
}

impl Default for LindbladConfig {
    fn default() -> Self {
        Self { grid: 24, n_a: 0.5, dt: None, t_max: None, record_every: 10, initial: [1.0, 0.0, 0.1], t_conv_grids: vec![24, 48] }
    }
}

/// `symmetry` options.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct SymmetryConfig {
    /// Matrix size (multiple of 4).
    pub n: usize,
    pub samples: usize,
}

impl Default for SymmetryConfig {
    fn default() -> Self {
        Self { n: 8, samples: 100 }
    }
}

/// `povm` options.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct PovmConfig {
    /// Construction strengths.
    pub alphas: Vec<f64>,
    pub phi: f64,
    /// Fermion modes of complex-class witnesses.
    pub n_modes: usize,
    /// Complex modes (half the Majorana count) of the DIII witness.
    pub diii_modes: usize,
    pub samples: usize,
    /// Scale of the sampled generators.
    pub scale: f64,
}

impl Default for PovmConfig {
    fn default() -> Self {
        Self { alphas: vec![0.3, 0.7, 1.3], phi: 0.4, n_modes: 4, diii_modes: 2, samples: 50, scale: 0.5 }
    }
}

/// `oracle-selftest` options.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct SelftestConfig {
    /// Randomized cases per operation.
    pub cases: usize,
    /// Run the injected-fault sentinel.
    pub sentinel: bool,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        Self { cases: 1000, sentinel: true }
    }
}

/// Full run configuration. Unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Optional; must match the subcommand when given.
    pub kind: Option<Kind>,
    /// Linear lattice size `L`.
    pub l: usize,
    pub alpha: f64,
    /// Truncation shell; omit for untruncated modes.
    pub n_shell: Option<usize>,
    pub cycles: usize,
    pub trajectories: usize,
    pub seed: u64,
    /// Coherent-noise strength `σ ∈ [0, 1]`.
    pub noise_sigma: f64,
    /// Total charge `Q`; defaults to `2L²`.
    pub charge: Option<usize>,
    /// Initial state of protocol runs other than `domain-wall`.
    pub initial: Initial,
    pub shuffle_order: bool,
    /// Eigenvalue clamp period in cycles (0 disables).
    pub clamp_every: usize,
    /// Output directory; `--out` overrides.
    pub out: Option<PathBuf>,
    /// Earlier `report.json` whose `result` block must match this run.
    pub fixture: Option<PathBuf>,
    pub schedule: ScheduleConfig,
    pub alpha_sweep: AlphaSweepConfig,
    pub noise_sweep: NoiseSweepConfig,
    pub domain_wall: DomainWallConfig,
    pub lindblad: LindbladConfig,
    pub symmetry: SymmetryConfig,
    pub povm: PovmConfig,
    pub selftest: SelftestConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            kind: None,
            l: 12,
            alpha: 1.5,
            n_shell: None,
            cycles: 12,
            trajectories: 1,
            seed: 0,
            noise_sigma: 0.0,
            charge: None,
            initial: Initial::default(),
            shuffle_order: false,
            clamp_every: DEFAULT_CLAMP_EVERY,
            out: None,
            fixture: None,
            schedule: ScheduleConfig::default(),
            alpha_sweep: AlphaSweepConfig::default(),
            noise_sweep: NoiseSweepConfig::default(),
            domain_wall: DomainWallConfig::default(),
            lindblad: LindbladConfig::default(),
            symmetry: SymmetryConfig::default(),
            povm: PovmConfig::default(),
            selftest: SelftestConfig::default(),
        }
    }
}

/// Parses TOML text; syntax and unknown-field errors carry line and column.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
}

/// Reads and parses a config file (`-` reads stdin).
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = if path == Path::new("-") {
        std::io::read_to_string(std::io::stdin()).map_err(|source| ConfigError::Io { path: path.into(), source })?
    } else {
        std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?
    };
    parse_config(&text)
}

/// JSON schema of [`RunConfig`].
pub fn schema_json() -> String {
    serde_json::to_string_pretty(&schemars::schema_for!(RunConfig)).expect("schema serializes")
}

impl RunConfig {
    /// Binds the config to `kind`, applying `--paper-scale` and filling `charge`.
    pub fn materialize(mut self, kind: Kind, paper_scale: bool) -> Result<Self, ConfigError> {
        if let Some(k) = self.kind {
            if k != kind {
                return Err(field("kind", format!("config is for `{}` but the subcommand is `{}`", k.name(), kind.name())));
            }
        }
        self.kind = Some(kind);
        if paper_scale && kind.is_protocol() {
            let (l, shell, traj) = PAPER_SCALE;
            self.l = l;
            self.n_shell = Some(shell);
            self.trajectories = traj;
        }
        if self.charge.is_none() {
            self.charge = Some(2 * self.l * self.l);
        }
        self.validate(kind)?;
        Ok(self)
    }

    /// Checks every field used by `kind`.
    pub fn validate(&self, kind: Kind) -> Result<(), ConfigError> {
        if kind.is_protocol() {
            self.protocol(self.alpha_field(), self.noise_sigma)?;
            if self.trajectories == 0 {
                return Err(field("trajectories", "must be at least 1"));
            }
            if self.schedule.chern_stride == 0 {
                return Err(field("schedule.chern_stride", "must be at least 1"));
            }
        }
        match kind {
            Kind::AlphaSweep if self.alpha_sweep.alphas.is_empty() => Err(field("alpha_sweep.alphas", "empty")),
            Kind::NoiseSweep => {
                if self.noise_sweep.sigmas.is_empty() {
                    return Err(field("noise_sweep.sigmas", "empty"));
                }
                match self.noise_sweep.sigmas.iter().find(|s| !(0.0..=1.0).contains(*s)) {
                    Some(s) => Err(field("noise_sweep.sigmas", format!("{s} outside [0, 1]"))),
                    None => Ok(()),
                }
            }
            Kind::DomainWall if self.l < 12 || self.l % 4 != 0 => Err(field("l", "domain walls need L divisible by 4 and L >= 12")),
            Kind::DomainWall if self.domain_wall.rate_window[0] >= self.domain_wall.rate_window[1] => {
                Err(field("domain_wall.rate_window", "needs lo < hi"))
            }
            Kind::Lindblad if self.lindblad.grid < 2 => Err(field("lindblad.grid", "must be at least 2")),
            Kind::Lindblad if !(0.0..=1.0).contains(&self.lindblad.n_a) => Err(field("lindblad.n_a", "outside [0, 1]")),
            Kind::Symmetry if self.symmetry.n == 0 || self.symmetry.n % 4 != 0 => Err(field("symmetry.n", "must be a positive multiple of 4")),
            Kind::Symmetry if self.symmetry.samples == 0 => Err(field("symmetry.samples", "must be at least 1")),
            Kind::Povm if self.povm.n_modes == 0 || self.povm.n_modes % 4 != 0 => {
                Err(field("povm.n_modes", "must be a positive multiple of 4"))
            }
            Kind::Povm if self.povm.n_modes > 8 || self.povm.diii_modes == 0 || self.povm.diii_modes > 4 => {
                Err(field("povm", "too many modes for the exact Fock-space witness"))
            }
            Kind::OracleSelftest if self.selftest.cases == 0 => Err(field("selftest.cases", "must be at least 1")),
            _ => Ok(()),
        }
    }

    /// `α` field of protocol runs: domain walls for `domain-wall`, uniform otherwise.
    pub fn alpha_field(&self) -> AlphaField {
        if self.kind == Some(Kind::DomainWall) {
            AlphaField::domain_wall(self.l, self.domain_wall.inner, self.domain_wall.outer)
        } else {
            AlphaField::uniform(self.l, self.alpha)
        }
    }

    /// Core protocol configuration with the given `α` field and noise.
    pub fn protocol(&self, alpha: AlphaField, noise_sigma: f64) -> Result<ProtocolConfig, ConfigError> {
        let lattice = Lattice::new(self.l).map_err(|e| field("l", e.to_string()))?;
        let cfg = ProtocolConfig {
            lattice,
            alpha,
            n_shell: self.n_shell,
            cycles: self.cycles,
            noise_sigma,
            charge: self.charge.unwrap_or(2 * self.l * self.l),
            seed: self.seed,
            trajectories: self.trajectories,
            initial: if self.kind == Some(Kind::DomainWall) { self.domain_wall.initial.into() } else { self.initial.into() },
            shuffle_order: self.shuffle_order,
            clamp_every: self.clamp_every,
        };
        cfg.validate().map_err(|e| {
            let name = match e {
                steer_core::Error::ChargeOutOfRange { .. } => "charge",
                steer_core::Error::Invalid(ref m) if m.contains("sigma") => "noise_sigma",
                steer_core::Error::Invalid(ref m) if m.contains("n_shell") => "n_shell",
                _ => "alpha",
            };
            field(name, e.to_string())
        })?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_steer_config_is_valid() {
        let cfg = parse_config("l = 12\nalpha = 1.5\nn_shell = 2\ncycles = 12\ntrajectories = 100\n").unwrap();
        let cfg = cfg.materialize(Kind::Steer, false).unwrap();
        assert_eq!(cfg.charge, Some(288));
        assert_eq!(cfg.n_shell, Some(2));
    }

    #[test]
    fn charge_at_upper_bound_is_rejected() {
        let cfg = parse_config("l = 6\ncharge = 144\n").unwrap();
        let err = cfg.materialize(Kind::Steer, false).unwrap_err();
        assert!(err.to_string().contains("`charge`"), "{err}");
    }

    #[test]
    fn unknown_field_is_named() {
        let err = parse_config("l = 6\nalpah = 1.0\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("alpah") && msg.contains("line 2"), "{msg}");
        let err = parse_config("[schedule]\nevry = 2\n").unwrap_err();
        assert!(err.to_string().contains("evry"));
    }

    #[test]
    fn kind_must_match_subcommand() {
        let cfg = parse_config("kind = \"lindblad\"\n").unwrap();
        assert!(cfg.clone().materialize(Kind::Steer, false).is_err());
        assert!(cfg.materialize(Kind::Lindblad, false).is_ok());
    }

    #[test]
    fn paper_scale_overrides_protocol_sizes() {
        let cfg = parse_config("l = 8\n").unwrap().materialize(Kind::AlphaSweep, true).unwrap();
        assert_eq!((cfg.l, cfg.n_shell, cfg.trajectories), (20, Some(5), 100));
        assert_eq!(cfg.charge, Some(800));
        let cfg = parse_config("l = 8\n").unwrap().materialize(Kind::Symmetry, true).unwrap();
        assert_eq!(cfg.l, 8);
    }

    #[test]
    fn schema_lists_fields() {
        let s = schema_json();
        for f in ["n_shell", "noise_sweep", "clamp_every", "alpha-sweep"] {
            assert!(s.contains(f), "{f}");
        }
    }
}
