use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pointerlab::experiments::{run_experiment, validation_report, Experiment, RunOptions};
use pointerlab::{Error, RunReport, Scenario};

#[derive(Parser)]
#[command(
    name = "pointerlab",
    version,
    about = "Run weak-pointer scenarios and emit figure data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one named experiment on a scenario file
    Run {
        file: PathBuf,
        #[arg(long, short = 'e')]
        experiment: String,
        #[arg(long, short = 'o')]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        /// Grid points per axis
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Parse and validate a scenario file without running anything
    Validate { file: PathBuf },
    /// List the experiment names
    List,
}

fn exit_for(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    if err.is_input_error() {
        ExitCode::from(2)
    } else {
        ExitCode::from(1)
    }
}

fn summarize(report: &RunReport) {
    for c in &report.checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        eprintln!(
            "{tag} {} (value {:.3e}, tolerance {:.3e})",
            c.name, c.value, c.tolerance
        );
    }
    for n in &report.notes {
        eprintln!("note: {n}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for e in Experiment::ALL {
                println!("{e}");
            }
            ExitCode::SUCCESS
        }
        Command::Validate { file } => match Scenario::load(&file) {
            Ok(sc) => {
                print!("{}", validation_report(&sc).to_json());
                ExitCode::SUCCESS
            }
            Err(e) => exit_for(&e),
        },
        Command::Run {
            file,
            experiment,
            out,
            seed,
            trials,
            grid,
        } => {
            let result = experiment.parse::<Experiment>().and_then(|exp| {
                let sc = Scenario::load(&file)?;
                run_experiment(
                    &sc,
                    exp,
                    &out,
                    &RunOptions {
                        seed,
                        trials,
                        grid_points: grid,
                    },
                )
            });
            match result {
                Ok(report) => {
                    summarize(&report);
                    println!("{}", out.join("report.json").display());
                    if report.passed {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => exit_for(&e),
            }
        }
    }
}
