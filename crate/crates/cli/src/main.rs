use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use vanet_cli::{execute, Command, ConfigMap};

/// Warning-message dissemination with tampering relays.
#[derive(Parser)]
#[command(name = "vanet", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Monte Carlo estimate of the success probability.
    Simulate(Settings),
    /// Numerical evaluation of the conditional recursion.
    Analytic(Settings),
    /// Exact enumeration on a fixed road (`topology = FILE`).
    Oracle(Settings),
    /// Evaluate every value of `sweep` with the configured method.
    Sweep(Settings),
    /// Smallest p_m at which the success probability reaches the 0.5 floor.
    Threshold(Settings),
    /// Plot result CSVs (`input = a.csv,b.csv x = pm out = fig.svg`).
    Plot(Settings),
}

#[derive(Args)]
struct Settings {
    /// Config file of `key = value` lines.
    #[arg(short, long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Overrides in `key=value` form, applied after the config file.
    #[arg(
        value_name = "KEY=VALUE",
        trailing_var_arg = true,
        allow_hyphen_values = true
    )]
    overrides: Vec<String>,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (command, settings) = match cli.command {
        Sub::Simulate(s) => (Command::Simulate, s),
        Sub::Analytic(s) => (Command::Analytic, s),
        Sub::Oracle(s) => (Command::Oracle, s),
        Sub::Sweep(s) => (Command::Sweep, s),
        Sub::Threshold(s) => (Command::Threshold, s),
        Sub::Plot(s) => (Command::Plot, s),
    };
    let mut cfg = match &settings.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            ConfigMap::parse(&text, &path.display().to_string())?
        }
        None => ConfigMap::default(),
    };
    cfg.apply_overrides(&settings.overrides)?;
    let stdout = std::io::stdout();
    execute(command, cfg, &mut stdout.lock())?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
