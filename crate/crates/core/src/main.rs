use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use holoq::cli::{load_config, run, RunError};

#[derive(Parser)]
#[command(name = "holoq", version, about = "Geometric phases of non-Hermitian Hamiltonians")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a job file and write its results.
    Run {
        config: PathBuf,
        /// Worker threads for grid tasks.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Parse and check a job file without running it.
    Validate { config: PathBuf },
}

fn fail(e: RunError) -> ExitCode {
    eprintln!("{}", e.diagnostic());
    ExitCode::from(e.exit_code())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match args.command {
        Command::Run { config, jobs, out } => match run(&config, &out, jobs) {
            Ok(paths) => {
                for p in paths {
                    println!("{}", p.display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Validate { config } => match load_config(&config) {
            Ok(cfg) => {
                println!("ok: task {}", cfg.task.name());
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
    }
}
