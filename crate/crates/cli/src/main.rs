//! `stdg`: batch front-end for the space-time DG solver.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::CliError;
use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "stdg", version, about = "Space-time DG solver for 1-D scalar conservation laws")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (flat `key = value` file).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Number of refinement levels (overrides `levels`).
    #[arg(long, global = true, value_name = "N")]
    levels: Option<usize>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for random probes (overrides `seed`).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Solve one run; write the solution dump and per-slab history.
    Solve,
    /// Refinement study against the reference solution.
    Converge,
    /// Stability, scaling and entropy checks over the refinement ladder.
    Diagnose,
    /// Probe the shock-capturing coercivity constant on random elements.
    ScLemma,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(|e| CliError::Usage(e.to_string()))?,
        None if cli.command == Command::ScLemma => RunConfig::defaults(),
        None => return Err(CliError::Usage("--config PATH is required".into())),
    };
    if let Some(levels) = cli.levels {
        if levels == 0 {
            return Err(CliError::Usage("--levels must be at least 1".into()));
        }
        cfg.levels = levels;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<String, CliError> {
    let cfg = load(cli)?;
    let out = cfg.output_dir.clone();
    match cli.command {
        Command::Solve => commands::solve(&cfg, &out),
        Command::Converge => commands::converge(&cfg, &out),
        Command::Diagnose => commands::diagnose(&cfg, &out),
        Command::ScLemma => commands::sc_lemma(&cfg, &out),
    }
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
    match run(&cli) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
