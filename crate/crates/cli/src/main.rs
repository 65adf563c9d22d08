use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ebcnf_cli::{load_config, run_experiment, CliError, ExperimentSpec};
use ebcnf_core::Protocol;

/// Clustered THz nanosensor network simulator.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment as configured, ignoring any sweep.
    Run(Common),
    /// Run all four protocols on the configured seeds.
    Compare(Common),
    /// Run the declared parameter sweep.
    Sweep(Common),
    /// Parse and validate the configuration, then print it.
    Validate { config: PathBuf },
}

#[derive(Args)]
struct Common {
    /// Configuration file.
    config: PathBuf,
    /// Output directory, overriding `experiment.output`.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn prepare(common: &Common) -> Result<ExperimentSpec, CliError> {
    let mut spec = load_config(&common.config)?;
    if let Some(out) = &common.output {
        spec.output = out.clone();
    }
    Ok(spec)
}

fn execute(spec: &ExperimentSpec) -> Result<(), CliError> {
    let out = run_experiment(spec)?;
    println!("{} runs written to {}", out.rounds.len(), spec.output.display());
    println!("summary: {}", out.summary.display());
    Ok(())
}

fn describe(spec: &ExperimentSpec) {
    let protocols: Vec<&str> = spec.protocols.iter().map(|p| p.name()).collect();
    println!("configuration valid");
    println!("  nodes: {}, rounds: {}", spec.base.node_count, spec.base.rounds);
    println!("  protocols: {}", protocols.join(", "));
    println!("  seeds: {:?}", spec.seeds);
    match &spec.sweep {
        Some(s) => println!("  sweep: {} over [{}]", s.key, s.values.join(", ")),
        None => println!("  sweep: none"),
    }
    println!("  runs: {}", spec.run_count());
    println!("  output: {}", spec.output.display());
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(common) => {
            let mut spec = prepare(&common)?;
            spec.sweep = None;
            execute(&spec)
        }
        Command::Compare(common) => {
            let mut spec = prepare(&common)?;
            spec.sweep = None;
            spec.protocols = Protocol::ALL.to_vec();
            execute(&spec)
        }
        Command::Sweep(common) => {
            let spec = prepare(&common)?;
            if spec.sweep.is_none() {
                return Err(CliError::Usage(format!(
                    "{}: no sweep declared (set experiment.sweep and experiment.sweep_values)",
                    common.config.display()
                )));
            }
            execute(&spec)
        }
        Command::Validate { config } => {
            describe(&load_config(&config)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
