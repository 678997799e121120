//! Configuration, orchestration and reporting for the steering simulator.
//!
//! A run reads a TOML [`config::RunConfig`], executes one experiment kind and
//! writes `report.json`, CSV tables, `timing.json` and `manifest.json` into an
//! output directory. Formats are documented in `docs/formats.md`.

pub mod config;
pub mod experiments;
pub mod report;
pub mod selftest;

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};

use config::{load_config, Kind, RunConfig};
use report::{compare_values, read_report, OutputDir, Report, Timing, FIXTURE_RTOL};

/// Environment variable overriding the worker count (the `--threads` flag wins).
pub const THREADS_ENV: &str = "FERMION_STEER_THREADS";

/// Options shared by every subcommand.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// TOML config; `None` uses the defaults.
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub paper_scale: bool,
}

/// How a finished run went.
#[derive(Clone, Debug, PartialEq)]
pub struct RunStatus {
    pub out: PathBuf,
    pub status: String,
    pub errors: Vec<String>,
}

impl RunStatus {
    pub fn success(&self) -> bool {
        self.status == "ok"
    }
}

/// Sizes the global worker pool; returns the worker count in use.
pub fn configure_threads(threads: Option<usize>) -> Result<usize> {
    if let Some(n) = threads {
        anyhow::ensure!(n > 0, "thread count must be positive");
        // A pool that already exists (tests, repeated calls) is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(rayon::current_num_threads())
}

/// Loads and materializes the config of a run.
pub fn prepare(kind: Kind, opts: &RunOptions) -> Result<RunConfig> {
    let mut cfg = match &opts.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    Ok(cfg.materialize(kind, opts.paper_scale)?)
}

/// Runs `kind` and writes all artifacts. Partial artifacts and the manifest are
/// written even when the experiment fails.
pub fn run(kind: Kind, opts: &RunOptions) -> Result<RunStatus> {
    let cfg = prepare(kind, opts)?;
    let out = opts.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out").join(kind.name()));
    let mut dir = OutputDir::create(&out)?;
    let start = Instant::now();
    let outcome = match experiments::run_kind(kind, &cfg) {
        Ok(o) => o,
        Err(e) => {
            dir.manifest.errors.push(format!("{e:#}"));
            dir.finish("failed")?;
            return Err(e);
        }
    };
    let report = Report::new(kind, &cfg, outcome.result);
    dir.write_json("report.json", &report)?;
    for t in &outcome.tables {
        dir.write_table(t)?;
    }
    dir.write_json(
        "timing.json",
        &Timing { schema_version: report::SCHEMA_VERSION.into(), wall_seconds: start.elapsed().as_secs_f64(), threads: rayon::current_num_threads() },
    )?;
    dir.manifest.completed_trajectories = outcome.completed;
    dir.manifest.failed_trajectories = outcome.failed;
    dir.manifest.errors = outcome.errors;
    if let Some(path) = &cfg.fixture {
        let fixture = read_report(path).with_context(|| format!("loading fixture {}", path.display()))?;
        let diffs = compare_values(&fixture.result, &report.result, FIXTURE_RTOL);
        dir.manifest.errors.extend(diffs.iter().map(|d| format!("fixture mismatch at {d}")));
        dir.manifest.fixture_mismatches = Some(diffs);
    }
    let status = if dir.manifest.errors.is_empty() { "ok" } else { "failed" };
    dir.finish(status)?;
    Ok(RunStatus { out, status: status.into(), errors: dir.manifest.errors.clone() })
}
