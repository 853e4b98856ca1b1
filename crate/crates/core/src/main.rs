use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hategraph_core::config::{validate_config, Overrides, Task};
use hategraph_core::runner::run_experiment;
use hategraph_core::Error;

/// Hate speech detection experiment runner.
#[derive(Parser)]
#[command(name = "hategraph", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured feature × classifier grid with k-fold cross-validation.
    Run {
        #[command(flatten)]
        common: Common,
        /// Maximum number of concurrently running threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Check a configuration and print it with defaults filled in.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    folds: Option<usize>,
    /// binary-combined, multiclass-rs or multiclass-hsol.
    #[arg(long)]
    task: Option<Task>,
    /// Record per-fold wall-clock seconds in the results file.
    #[arg(long)]
    timings: bool,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            output: self.out.clone(),
            seed: self.seed,
            folds: self.folds,
            task: self.task,
            timings: self.timings,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (common, jobs) = match &cli.command {
        Command::Run { common, jobs } => (common, Some(*jobs)),
        Command::Validate { common } => (common, None),
    };
    let cfg = match validate_config(&common.config, &common.overrides()) {
        Ok(c) => c,
        Err(e) => {
            match e {
                Error::Config(_) => eprintln!("{e}"),
                _ => eprintln!("error: {e}"),
            }
            return ExitCode::from(2);
        }
    };
    for d in &cfg.defaults_applied {
        log::info!("default: {d}");
    }

    let Some(jobs) = jobs else {
        match serde_json::to_string_pretty(&cfg) {
            Ok(s) => println!("{s}"),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::FAILURE;
            }
        }
        return ExitCode::SUCCESS;
    };

    match run_experiment(&cfg, jobs) {
        Ok(summary) if summary.succeeded() => {
            log::info!(
                "{} records written to {}",
                summary.records.len(),
                summary.output.display()
            );
            ExitCode::SUCCESS
        }
        Ok(summary) => {
            eprintln!(
                "{} of {} grid cells failed; see {}",
                summary.failed(),
                summary.cells.len(),
                summary.output.join("manifest.json").display()
            );
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
