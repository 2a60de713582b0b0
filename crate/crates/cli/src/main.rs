use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use metapop_cli::{dispatch, parse_config, CliError, Command};

/// Metapopulation simulator for vector-borne epidemics.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Directory for outputs and the run manifest.
    #[arg(short, long, default_value = "output")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the patch network and write nodes.csv and mosq_edges.csv.
    Build(RunArgs),
    /// Generate human mobility and write mobility.csv.
    GenMobility(RunArgs),
    /// Run one scenario and write the time series.
    Simulate(RunArgs),
    /// Final seroprevalence over a grid of infection rates.
    Sweep(RunArgs),
    /// Compare quarantine thresholds against an unrestricted run.
    Quarantine(RunArgs),
    /// Repeat a scenario over regenerated mobility.
    Replicates(RunArgs),
    /// Size, degree, components and diameter of both networks.
    Metrics(RunArgs),
    /// Compare a run with weekly reference case counts.
    Compare(RunArgs),
    /// Run the numerical property checks.
    Verify(RunArgs),
}

fn split(cmd: Cmd) -> (Command, RunArgs) {
    match cmd {
        Cmd::Build(a) => (Command::Build, a),
        Cmd::GenMobility(a) => (Command::GenMobility, a),
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::Quarantine(a) => (Command::Quarantine, a),
        Cmd::Replicates(a) => (Command::Replicates, a),
        Cmd::Metrics(a) => (Command::Metrics, a),
        Cmd::Compare(a) => (Command::Compare, a),
        Cmd::Verify(a) => (Command::Verify, a),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (command, args) = split(cli.command);
    let loaded = parse_config(&args.config)?;
    dispatch(command, &loaded, &args.out).with_context(|| format!("`{}` failed", command.name()))?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err.downcast_ref::<CliError>().map_or(2, CliError::exit_code);
            ExitCode::from(code)
        }
    }
}
