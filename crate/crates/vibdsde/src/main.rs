use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use vibdsde::config::{Command, Overrides};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Action {
    Forward,
    Solve,
    Field,
    Verify,
    Rate,
    /// Use the `command` field of the config.
    Run,
}

/// Monte Carlo solver for reflected backward doubly stochastic equations
/// with convex constraints.
#[derive(Debug, Parser)]
#[command(name = "vibdsde", version)]
struct Cli {
    #[arg(value_enum)]
    action: Action,
    /// JSON configuration file.
    config: PathBuf,
    /// Master seed; overrides VIBDSDE_SEED and the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of Monte Carlo paths.
    #[arg(long)]
    paths: Option<usize>,
    /// Number of time steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("vibdsde: cannot set up {n} threads: {e}");
            return ExitCode::from(3);
        }
    }
    let command = match cli.action {
        Action::Forward => Some(Command::Forward),
        Action::Solve => Some(Command::Solve),
        Action::Field => Some(Command::Field),
        Action::Verify => Some(Command::Verify),
        Action::Rate => Some(Command::Rate),
        Action::Run => None,
    };
    let overrides = Overrides {
        command,
        seed: cli.seed,
        env_seed: vibdsde::env_seed(),
        paths: cli.paths,
        steps: cli.steps,
        out: cli.out,
    };
    let report = vibdsde::run(&cli.config, &overrides);
    match &report.error {
        Some(e) => eprintln!("vibdsde: {e}"),
        None => {
            if let Some(dir) = &report.out_dir {
                println!("wrote {}", dir.display());
            }
        }
    }
    ExitCode::from(report.exit_code as u8)
}
