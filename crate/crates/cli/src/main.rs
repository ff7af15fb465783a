//! Experiment harness for the three-resonator storage/transduction simulator.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use exp_cli::config::{ConfigError, ExperimentConfig, ExperimentKind};
use exp_cli::run::{self, RunError};
use exp_cli::report;

#[derive(Parser)]
#[command(name = "exp-cli", version, about = "Quantum memory / transduction experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for result files.
    #[arg(long)]
    out: PathBuf,
    /// Override numerics.n_traj.
    #[arg(long)]
    traj: Option<usize>,
    /// Override numerics.master_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Replace an existing results directory.
    #[arg(long)]
    overwrite: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Store-and-retrieve memory experiment.
    Memory(RunArgs),
    /// Microwave-to-optics transduction experiment.
    Transduce(RunArgs),
    /// Area x separation transduction-fidelity grid.
    Contour(RunArgs),
    /// Trajectory-ensemble vs master-equation consistency check.
    OracleCheck(RunArgs),
    /// Merge result directories into plot-ready tables.
    Report {
        /// Output directory for the report tables.
        #[arg(long)]
        out: PathBuf,
        /// Result directories produced by the run subcommands.
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn classify(err: &RunError) -> u8 {
    match err {
        RunError::Config(_) | RunError::Collision(_) | RunError::Report(_) => EXIT_CONFIG,
        RunError::Io { .. } => EXIT_CONFIG,
        RunError::Sim(_) => EXIT_NUMERICAL,
    }
}

fn execute_run(kind: ExperimentKind, args: &RunArgs) -> Result<(), RunError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if cfg.kind != kind {
        return Err(RunError::Config(ConfigError::Invalid {
            field: "kind".into(),
            message: format!("config kind {} does not match subcommand {kind}", cfg.kind),
        }));
    }
    if let Some(t) = args.traj {
        cfg.numerics.n_traj = t;
    }
    if let Some(s) = args.seed {
        cfg.numerics.master_seed = s;
    }
    cfg.validate()?;
    if let Some(w) = args.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| RunError::Report(format!("worker pool: {e}")))?;
    }
    let records = run::run_experiment(&cfg, &args.out, args.overwrite)?;
    for r in &records {
        eprintln!(
            "point Q_m={} nbar={}: mean fidelity {:.6}",
            run::fmt_q(r.q_m.0),
            r.nbar,
            r.mean_fidelity
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Memory(args) => execute_run(ExperimentKind::Memory, args),
        Command::Transduce(args) => execute_run(ExperimentKind::Transduce, args),
        Command::Contour(args) => execute_run(ExperimentKind::Contour, args),
        Command::OracleCheck(args) => execute_run(ExperimentKind::OracleCheck, args),
        Command::Report { out, dirs } => {
            let borrowed: Vec<&std::path::Path> = dirs.iter().map(|p| p.as_path()).collect();
            report::emit_report(&borrowed, out)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(classify(&e))
        }
    }
}
