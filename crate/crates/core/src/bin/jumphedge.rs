use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use jumphedge_core::experiment::{load_config, run_config_file, RunOptions};
use jumphedge_core::Error;

/// Hitting-time rebalancing experiments for jump-driven integrals.
#[derive(Debug, Parser)]
#[command(name = "jumphedge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Cap on worker threads; results do not depend on it.
        #[arg(long)]
        threads: Option<usize>,
        /// Output directory (overrides the config's `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Master seed (overrides the config's `master_seed`).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } => 2,
        e if e.is_numerical_budget() => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Validate { config } => load_config(&config).map(|(_, exp)| {
            println!(
                "{}: valid {} config ({} epsilons, {} paths)",
                config.display(),
                exp.config.experiment.name(),
                exp.config.epsilons.len(),
                exp.config.n_paths
            );
        }),
        Command::Run {
            config,
            threads,
            out,
            seed,
        } => run_config_file(
            &config,
            &RunOptions {
                threads,
                out_dir: out,
                seed,
            },
        )
        .map(|report| {
            for f in &report.files {
                println!("{}", report.out_dir.join(f).display());
            }
            eprintln!("runtime: {:.3} s", report.result.runtime.as_secs_f64());
        }),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
