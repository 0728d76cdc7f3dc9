use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use somf::runner::{self, TooLarge};

#[derive(Parser)]
#[command(name = "somf", about = "Streaming matrix factorization benchmark runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every sweep combination from a config file and summarize.
    Run {
        config: PathBuf,
    },
    /// Run the full-batch alternate-minimization reference.
    Oracle {
        config: PathBuf,
        /// Run even when p*n exceeds the size cutoff.
        #[arg(long)]
        force: bool,
    },
    /// Summarize an existing metrics directory.
    Summarize {
        dir: PathBuf,
    },
    /// Generate a synthetic dataset from a spec file.
    Gen {
        spec: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => runner::cmd_run(&config),
        Command::Oracle { config, force } => runner::cmd_oracle(&config, force),
        Command::Summarize { dir } => runner::cmd_summarize(&dir),
        Command::Gen { spec, output } => runner::cmd_gen(&spec, &output),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<TooLarge>() => {
            eprintln!("refusing: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
