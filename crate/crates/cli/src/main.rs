use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod config;
mod run;

/// Cohomology of one-dimensional tiling spaces, with verification suites.
#[derive(Parser)]
#[command(name = "tilecoh", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Approximant complexes, their cohomology and the direct limit of H^1.
    Apg(Common),
    /// Chain-map and injectivity suites for transversal cochains.
    PvVerify(Common),
    /// Group cohomology of a cut&project rotation and the jump-functional suite.
    Cutproject(Common),
    /// Eigenspace quotient of H^1 under a transition matrix.
    Mixed(Common),
    /// Integration and extension suites for strongly pattern-equivariant forms.
    Derham(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `random_seed` from the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include wall-clock timings (reports are then no longer reproducible).
    #[arg(long)]
    timings: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Apg,
    PvVerify,
    Cutproject,
    Mixed,
    Derham,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Apg => "apg",
            Command::PvVerify => "pv-verify",
            Command::Cutproject => "cutproject",
            Command::Mixed => "mixed",
            Command::Derham => "derham",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Sub::Apg(a) => (Command::Apg, a),
        Sub::PvVerify(a) => (Command::PvVerify, a),
        Sub::Cutproject(a) => (Command::Cutproject, a),
        Sub::Mixed(a) => (Command::Mixed, a),
        Sub::Derham(a) => (Command::Derham, a),
    };
    let mut cfg = match config::load_config(&args.config, command) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = args.seed {
        cfg.random_seed = seed;
    }
    let report = match run::run(&cfg, command, args.timings) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {}: {e}", command.name());
            return ExitCode::from(1);
        }
    };
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    match &args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &json) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{json}"),
    }
    eprintln!(
        "{}: {} failure(s), {} warning(s)",
        command.name(),
        report.failures.len(),
        report.warnings.len()
    );
    if report.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
