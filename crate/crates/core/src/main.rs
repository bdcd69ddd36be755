use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use c2al::cli::{cmd_generate, cmd_report, cmd_run, ScenarioConfig};

/// Conditionally collaborative active learning simulator.
#[derive(Parser)]
#[command(name = "c2al", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the scenario's dataset as CSV with a sidecar spec.
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (defaults to the config's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the scenario for every seed and write logs, metrics and summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated session seeds overriding the config's list.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Dump each round's ensemble training matrices as CSV.
        #[arg(long)]
        debug_matrices: bool,
    },
    /// Aggregate a finished run directory into plot-ready CSVs.
    Report {
        #[arg(long)]
        config: PathBuf,
        /// Run directory (defaults to the config's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_config_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

fn execute(cli: Cli) -> c2al::Result<()> {
    match cli.command {
        Command::Generate { config, out } => {
            let config = ScenarioConfig::from_path(&config)?;
            let path = cmd_generate(&config, out.as_deref())?;
            println!("{}", path.display());
        }
        Command::Run {
            config,
            out,
            seeds,
            debug_matrices,
        } => {
            let config = ScenarioConfig::from_path(&config)?;
            let summary = cmd_run(&config, out.as_deref(), seeds.as_deref(), debug_matrices)?;
            for aggregate in &summary.per_collaborator {
                println!(
                    "collaborator {}: final AUC median {:.4} (min {:.4}, max {:.4})",
                    aggregate.collaborator,
                    aggregate.final_auc_median,
                    aggregate.final_auc_min,
                    aggregate.final_auc_max
                );
            }
        }
        Command::Report { config, out } => {
            let config = ScenarioConfig::from_path(&config)?;
            let run_dir = out.unwrap_or_else(|| config.output_dir.clone());
            let outputs = cmd_report(&run_dir)?;
            println!("{}", outputs.auc_series.display());
            println!("{}", outputs.importance_bars.display());
        }
    }
    Ok(())
}
