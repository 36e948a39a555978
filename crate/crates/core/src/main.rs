use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fdcr::cli::{self, exit, RunOptions};

#[derive(Parser)]
#[command(name = "fdcr", version, about = "Full-duplex cognitive radio experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for the CSV and metadata files.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Merge the config over a built-in preset.
        #[arg(long, value_parser = cli::PRESETS)]
        preset: Option<String>,
    },
    /// Resolve a config file and report units and derived quantities without running it.
    Validate {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = cli::PRESETS)]
        preset: Option<String>,
    },
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let result = match args.command {
        Command::Run { config, seed, out_dir, preset } => {
            cli::run(&config, &RunOptions { seed, out_dir, preset }).map(|report| {
                println!("{}", report.summary);
                println!("wrote {}", report.csv.display());
                println!("wrote {}", report.metadata.display());
            })
        }
        Command::Validate { config, seed, preset } => {
            cli::validate(&config, &RunOptions { seed, out_dir: None, preset }).map(|report| print!("{report}"))
        }
    };
    match result {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
