use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use total_stab::cli::{self, OutFormat};

/// Train kernel-regularized risk minimizers on finite spaces and verify
/// the total-stability bounds that control them.
#[derive(Parser)]
#[command(name = "total-stab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutArg {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run the stability verifications described by a scenario file.
    Verify {
        /// Scenario file (JSON).
        path: PathBuf,
        /// Report format printed to stdout.
        #[arg(long, value_enum, default_value = "json")]
        out: OutArg,
        /// Seed for the file's random_batch section.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for scenario evaluation.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Measure kernel perturbation distances against their analytic
    /// bounds.
    KernelDist {
        path: PathBuf,
        /// Override the grid resolution of the file's space.
        #[arg(long)]
        grid_resolution: Option<usize>,
    },
    /// Run a single training problem and print its solve report.
    Train { path: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("TOTAL_STAB_LOG")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Verify {
            path,
            out,
            seed,
            jobs,
        } => {
            let format = match out {
                OutArg::Json => OutFormat::Json,
                OutArg::Csv => OutFormat::Csv,
            };
            cli::cmd_verify(&path, format, seed, jobs)
        }
        Command::KernelDist {
            path,
            grid_resolution,
        } => cli::cmd_kernel_dist(&path, grid_resolution),
        Command::Train { path } => cli::cmd_train(&path),
    };
    match outcome {
        Ok((rendered, code)) => {
            println!("{rendered}");
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
