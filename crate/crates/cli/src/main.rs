//! `qcorr`: decompositions, protocol sweeps, error budgets and correlation values from the command line.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::SynthTarget;
use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "qcorr", version, about = "Time-ordered bath correlations with synthesized sensor channels")]
struct Cli {
    /// Worker threads for parameter sweeps (default: all cores).
    #[arg(long, global = true, env = "QCORR_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Expand a qubit superoperator into the 16 catalog operations.
    Synthesize(SynthesizeArgs),
    /// Check the decomposition of all 16 sparse elements against the reference table.
    VerifyTable2,
    /// Run a protocol sweep and write signal and target CSVs.
    Simulate(SimulateArgs),
    /// Tabulate error components against the coupling window δt.
    Budget(RunArgs),
    /// Evaluate one bath correlation.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct TargetArgs {
    /// Named sparse element, e.g. Pxx or P00.
    #[arg(long)]
    element: Option<String>,
    /// File with a 4×4 complex matrix in the Pauli basis.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Same as the verify-table2 subcommand.
    #[arg(long)]
    verify_table2: bool,
}

#[derive(Debug, Args)]
struct SynthesizeArgs {
    #[command(flatten)]
    target: TargetArgs,
    /// Also write the weights as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Run configuration (TOML); defaults apply when omitted.
    #[arg(long, conflicts_with = "replay")]
    config: Option<PathBuf>,
    /// Rerun the configuration embedded in an earlier output CSV.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Output CSV, overriding output.path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Also sweep τ21 × τ43 and write the 2D signal and its spectral density.
    #[arg(long = "2d")]
    two_d: bool,
}

#[derive(Debug, Args)]
struct OracleArgs {
    /// Ordering sequence, latest slot first, e.g. "+--+".
    #[arg(allow_hyphen_values = true)]
    eta: String,
    /// Slot times in seconds, earliest first.
    #[arg(required = true, num_args = 1..)]
    times: Vec<f64>,
    /// Experiment parameters from a run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn load(args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match (&args.config, &args.replay) {
        (Some(path), _) => {
            let mut c = RunConfig::load(path)?;
            // Channel files are relative to the config that names them.
            if let (Some(ch), Some(dir)) = (&c.protocol.channels, path.parent()) {
                if ch.is_relative() {
                    c.protocol.channels = Some(dir.join(ch));
                }
            }
            c
        }
        (None, Some(path)) => commands::embedded_config(path)?,
        (None, None) => RunConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Synthesize(a) => {
            let t = a.target;
            if t.verify_table2 {
                return commands::verify_table2();
            }
            let target = match (&t.element, &t.matrix) {
                (Some(e), _) => SynthTarget::Element(e),
                (None, Some(m)) => SynthTarget::MatrixFile(m),
                (None, None) => unreachable!("clap requires one target"),
            };
            commands::synthesize(target, a.out.as_deref())
        }
        Command::VerifyTable2 => commands::verify_table2(),
        Command::Simulate(a) => {
            let cfg = load(&a.run)?;
            let out = commands::output_path(&cfg, a.run.out.clone());
            commands::simulate(&cfg, &out, a.two_d)
        }
        Command::Budget(a) => {
            let cfg = load(&a)?;
            let out = commands::output_path(&cfg, a.out.clone());
            commands::budget(&cfg, &out)
        }
        Command::Oracle(a) => {
            let cfg = match &a.config {
                Some(p) => RunConfig::load(p)?,
                None => RunConfig::default(),
            };
            commands::oracle(&cfg, &a.eta, &a.times)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
