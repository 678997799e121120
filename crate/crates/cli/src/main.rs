//! `fermion-steer` command-line entry point.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fermion_steer::config::{schema_json, Kind};
use fermion_steer::{configure_threads, run, RunOptions, THREADS_ENV};

#[derive(Parser)]
#[command(name = "fermion-steer", version, about = "Adaptive steering of free fermions into a Chern insulator")]
struct Cli {
    /// Print the JSON schema of the config file and exit.
    #[arg(long)]
    emit_schema: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file (`-` reads stdin); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config; default `out/<subcommand>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, env = THREADS_ENV)]
    threads: Option<usize>,
    /// Use L = 20, n_shell = 5 and 100 trajectories for protocol runs.
    #[arg(long)]
    paper_scale: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Ensemble of steering trajectories at one configuration.
    Steer(RunArgs),
    /// Steering ensembles across α.
    AlphaSweep(RunArgs),
    /// Steering ensembles across coherent-noise strengths.
    NoiseSweep(RunArgs),
    /// Half-topological, half-trivial steering run.
    DomainWall(RunArgs),
    /// Occupation-density equations of motion and convergence time.
    Lindblad(RunArgs),
    /// Symmetry-class correspondence table.
    Symmetry(RunArgs),
    /// POVM constructions and inadmissibility witnesses.
    Povm(RunArgs),
    /// Oracle battery, symmetry and POVM checks, injected-fault sentinel.
    OracleSelftest(RunArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.emit_schema {
        // A closed pipe (e.g. `| head`) is not an error.
        let _ = writeln!(std::io::stdout(), "{}", schema_json());
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("error: a subcommand is required (see --help)");
        return ExitCode::from(2);
    };
    let (kind, args) = match command {
        Command::Steer(a) => (Kind::Steer, a),
        Command::AlphaSweep(a) => (Kind::AlphaSweep, a),
        Command::NoiseSweep(a) => (Kind::NoiseSweep, a),
        Command::DomainWall(a) => (Kind::DomainWall, a),
        Command::Lindblad(a) => (Kind::Lindblad, a),
        Command::Symmetry(a) => (Kind::Symmetry, a),
        Command::Povm(a) => (Kind::Povm, a),
        Command::OracleSelftest(a) => (Kind::OracleSelftest, a),
    };
    if let Err(e) = configure_threads(args.threads) {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    let opts = RunOptions { config: args.config, seed: args.seed, out: args.out, paper_scale: args.paper_scale };
    match run(kind, &opts) {
        Ok(status) => {
            for e in &status.errors {
                eprintln!("{e}");
            }
            println!("{}: {} ({})", kind.name(), status.status, status.out.display());
            if status.success() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
