use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use diskgap::cli::{run_command, write_failure_record, CommandKind};
use diskgap::config::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "diskgap",
    about = "Solver and verification campaigns for the two-disk composite-media Dirichlet problem"
)]
struct Args {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration file (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides output.directory from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker thread count; overrides solver.threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Config override `section.key = value`, repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// One solve with the gradient-bound and maximum-principle diagnostics.
    Solve,
    /// Gap-width sweep over geometry.deltas and solver.h_levels.
    Sweep,
    /// Identity-residual convergence study on closed-form families.
    Identities,
    /// Transmission oracles: single dielectric disk and radial constancy.
    Oracle,
    /// Barrier profile dump and invariant check.
    Barrier,
    /// Merge prior CSV artifacts into one JSON summary.
    Report,
}

impl Command {
    fn kind(&self) -> CommandKind {
        match self {
            Command::Solve => CommandKind::Solve,
            Command::Sweep => CommandKind::Sweep,
            Command::Identities => CommandKind::Identities,
            Command::Oracle => CommandKind::Oracle,
            Command::Barrier => CommandKind::Barrier,
            Command::Report => CommandKind::Report,
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let kind = args.command.kind();

    let cfg = match load_config(&args) {
        Ok(cfg) => cfg,
        Err(e) => {
            let out = args.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            eprintln!("{e}");
            write_failure_record(&out, kind.name(), &e);
            return ExitCode::from(2);
        }
    };

    let threads = args.threads.unwrap_or(cfg.solver.threads);
    if threads > 0 {
        // Ignore the error if a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    let out_dir = args
        .out
        .unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
    match run_command(kind, &cfg, &out_dir) {
        Ok(outcome) if outcome.pass => ExitCode::SUCCESS,
        Ok(_) => {
            eprintln!("{}: invariant checks failed, see artifacts", kind.name());
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("{e}");
            write_failure_record(&out_dir, kind.name(), &e);
            ExitCode::from(2)
        }
    }
}

fn load_config(args: &Args) -> Result<ExperimentConfig, diskgap::cli::CliError> {
    let text = match &args.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| diskgap::cli::CliError::Config(diskgap::config::ConfigError::Io(e)))?,
        None => String::new(),
    };
    Ok(ExperimentConfig::from_toml(&text, &args.overrides)?)
}
