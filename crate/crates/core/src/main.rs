use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use neardgd::harness::{self, ExperimentConfig};

#[derive(Parser)]
#[command(name = "neardgd", version, about = "NEAR-DGD+ simulation, bounds and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset or a configuration file and write CSV output.
    Run {
        #[arg(long, value_parser = ["regression", "piecewise"], conflicts_with = "config")]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Keep only this schedule (1-based).
        #[arg(long)]
        case: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the iteration count.
        #[arg(long)]
        iterations: Option<usize>,
        /// Run schedules one after another instead of in parallel.
        #[arg(long)]
        sequential: bool,
    },
    /// Run the lemma verifiers on a seeded battery.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the constants of a configuration.
    Inspect {
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        #[arg(long, value_parser = ["regression", "piecewise"])]
        preset: Option<String>,
    },
}

fn load(preset: Option<String>, config: Option<PathBuf>) -> neardgd::Result<ExperimentConfig> {
    match (preset, config) {
        (_, Some(path)) => ExperimentConfig::load(&path),
        (Some(name), None) => harness::preset(&name),
        (None, None) => Err(neardgd::Error::Config("pass --preset or --config".into())),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> neardgd::Result<ExitCode> {
    match cli.command {
        Command::Run {
            preset,
            config,
            case,
            seed,
            out,
            iterations,
            sequential,
        } => {
            let mut cfg = load(preset, config)?;
            if let Some(n) = case {
                cfg.select_case(n)?;
            }
            if let Some(s) = seed {
                cfg.problem.set_seed(s);
            }
            if let Some(dir) = out {
                cfg.output = dir;
            }
            if let Some(k) = iterations {
                cfg.iterations = k;
            }
            let exec = if sequential {
                neardgd::par::Execution::Sequential
            } else {
                neardgd::par::Execution::Parallel
            };
            let summary = harness::run_experiment_with(&cfg, exec)?;
            print!("{summary}");
            println!("summary written to {}", summary.summary_path.display());
            Ok(if summary.monitors_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Verify { seed } => {
            let report = harness::verify(seed);
            print!("{report}");
            Ok(if report.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Inspect { config, preset } => {
            let cfg = load(preset, config)?;
            print!("{}", harness::inspect(&cfg)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}
