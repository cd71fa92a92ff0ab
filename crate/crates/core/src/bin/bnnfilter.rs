use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bnnfilter::expcli::{run, ExperimentConfig, ExperimentKind};

#[derive(Parser)]
#[command(name = "bnnfilter", version, about = "Binary network optimizer experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Latent SGD and the filter optimizer on the same data, compared flip by flip
    Equivalence(Flags),
    /// Raw, first-order and second-order filtered gradient of one weight
    FilterResponse(Flags),
    /// Scaled learning rate against inversely scaled initialization
    LrVsInit(Flags),
    /// Accuracy against learning rate for three latent settings
    LrSensitivity(Flags),
    /// Flip ratio and accuracy against alpha
    AlphaSweep(Flags),
    /// Decayed against constant alpha
    AlphaDecay(Flags),
    /// Random search over each view's tunables
    Hpsearch(Flags),
    /// A single training run
    Train(Flags),
}

#[derive(clap::Args)]
struct Flags {
    /// Config file of `key = value` lines; the subcommand sets the experiment
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for run logs and summary.csv
    #[arg(long)]
    out: Option<PathBuf>,
    /// Parallel training runs
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(command: Command) -> Result<(), Box<dyn std::error::Error>> {
    let (kind, flags) = match command {
        Command::Equivalence(f) => (ExperimentKind::Equivalence, f),
        Command::FilterResponse(f) => (ExperimentKind::FilterResponse, f),
        Command::LrVsInit(f) => (ExperimentKind::LrVsInit, f),
        Command::LrSensitivity(f) => (ExperimentKind::LrSensitivity, f),
        Command::AlphaSweep(f) => (ExperimentKind::AlphaSweep, f),
        Command::AlphaDecay(f) => (ExperimentKind::AlphaDecay, f),
        Command::Hpsearch(f) => (ExperimentKind::HpSearch, f),
        Command::Train(f) => (ExperimentKind::Train, f),
    };
    let mut cfg = match flags.config {
        Some(p) => ExperimentConfig::from_path(&p)?,
        None => ExperimentConfig::default(),
    };
    cfg.experiment = kind;
    if let Some(seed) = flags.seed {
        cfg.seed = seed;
    }
    if let Some(out) = flags.out {
        cfg.out = Some(out);
    }
    if let Some(jobs) = flags.jobs {
        cfg.jobs = jobs;
    }
    let report = run(&cfg)?;
    for line in report.lines() {
        println!("{line}");
    }
    if let Some(dir) = &cfg.out {
        println!("results written to {}", dir.display());
    }
    Ok(())
}
