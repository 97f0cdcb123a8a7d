//! `f1b-lab`: experiments on the Flagged-1-Bit test.

mod commands;
mod output;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::settings::Settings;

#[derive(Debug, Parser)]
#[command(name = "f1b-lab", version, about = "Flagged-1-Bit test: constructions, verification and simulation")]
struct Cli {
    /// Worker threads for path-level parallelism (results do not depend on it)
    #[arg(long, global = true, env = "F1B_WORKERS")]
    workers: Option<usize>,
    /// TOML file with default settings; command-line flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; a `.manifest.json` is written next to it
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print sample paths, one per line
    Gen(Settings),
    /// Write the parameters of a pass construction as JSON
    Construct(Settings),
    /// Exact error over every path by enumeration
    Verify(Settings),
    /// Worst-case certification of a construction
    Certify(Settings),
    /// Monte-Carlo state distributions per class
    Simulate(Settings),
    /// Scalar vanilla parameter sweep
    Sweep(Settings),
    /// Train a two-dimensional tanh vanilla RNN
    Train(Settings),
    /// Replay the published learned two-dimensional weights
    #[command(name = "replay-fig4")]
    ReplayFig4(Settings),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Construct(_) => "construct",
            Command::Verify(_) => "verify",
            Command::Certify(_) => "certify",
            Command::Simulate(_) => "simulate",
            Command::Sweep(_) => "sweep",
            Command::Train(_) => "train",
            Command::ReplayFig4(_) => "replay-fig4",
        }
    }

    fn into_settings(self) -> Settings {
        match self {
            Command::Gen(s)
            | Command::Construct(s)
            | Command::Verify(s)
            | Command::Certify(s)
            | Command::Simulate(s)
            | Command::Sweep(s)
            | Command::Train(s)
            | Command::ReplayFig4(s) => s,
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(commands::UsageError("--workers must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(w).build_global()?;
    }
    let name = cli.command.name();
    let flags = cli.command.into_settings();
    let settings = match &cli.config {
        Some(path) => flags.over(Settings::load(path).map_err(|e| commands::UsageError(format!("{e:#}")))?)?,
        None => flags,
    };
    commands::dispatch(name, settings, cli.out.as_deref())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
