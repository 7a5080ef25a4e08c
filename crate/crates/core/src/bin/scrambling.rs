use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use scrambling::runner::{run, ExperimentConfig, RunOptions};

#[derive(Parser)]
#[command(version, about = "Run time-scaling precision experiments from JSON configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one experiment and write its CSV and JSON sidecar.
    Run {
        config: PathBuf,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Worker threads (all cores if omitted).
        #[arg(long)]
        threads: Option<usize>,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let Command::Run { config, out, threads, seed } = Cli::parse().command;
    let result = ExperimentConfig::load(&config).and_then(|cfg| {
        let base_dir = config.parent().map(PathBuf::from);
        run(&cfg, &RunOptions { out_dir: out, threads, seed, base_dir })
    });
    match result {
        Ok(out) => {
            if !out.warnings.is_empty() {
                eprintln!("{} warning(s), listed in the sidecar and the CSV warning column", out.warnings.len());
            }
            if let Some(csv) = &out.csv {
                println!("{}", csv.display());
            }
            println!("{}", out.sidecar.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
