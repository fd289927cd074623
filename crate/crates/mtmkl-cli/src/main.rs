//! Batch entry point. Every subcommand writes `report.json` into its output
//! directory and exits zero exactly when that file was written.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use mtmkl_cli::commands::{cmd_affinity, cmd_bound, cmd_grid, cmd_predict, cmd_train, CliError};
use mtmkl_cli::config::{init_threads, load_config, thread_cap, Overrides};

#[derive(Parser)]
#[command(name = "mtmkl", version, about = "Multi-task multiple kernel learning: train, tune, and inspect fused-weight SVM models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Split-shuffling seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for the report and artifacts.
    #[arg(long)]
    output: Option<PathBuf>,
    /// ours, stl (independent tasks), or mtl (one shared weight vector).
    #[arg(long)]
    mode: Option<String>,
    /// Fusion strength; stl pins 0 and mtl treats this as its large value.
    #[arg(long)]
    lambda: Option<f64>,
    /// Misclassification budget C.
    #[arg(long)]
    c: Option<f64>,
    /// Consensus penalty of the weight subproblem.
    #[arg(long)]
    rho: Option<f64>,
    /// Worker cap; the MTMKL_THREADS variable is the fallback.
    #[arg(long)]
    threads: Option<usize>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            output: self.output.clone(),
            mode: self.mode.clone(),
            lambda: self.lambda,
            c: self.c,
            rho: self.rho,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train with the configured (C, lambda) and report test accuracy.
    Train(RunArgs),
    /// Search the (C, lambda) grid by validation accuracy, retrain the winner.
    Grid(RunArgs),
    /// Evaluate a saved model on the test split.
    Predict {
        #[command(flatten)]
        run: RunArgs,
        /// Saved model file.
        #[arg(long)]
        model: PathBuf,
    },
    /// Export pairwise weight distances and the epsilon grouping of a model.
    Affinity {
        /// Saved model file.
        #[arg(long)]
        model: PathBuf,
        /// Output directory.
        #[arg(long, default_value = "out")]
        output: PathBuf,
        /// Tasks closer than this are grouped (transitively).
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
    },
    /// Print sqrt(sqrt(3) * gamma * R * M / (n * T)).
    Bound {
        gamma: f64,
        radius: f64,
        kernels: usize,
        samples: usize,
        tasks: usize,
        /// Output directory.
        #[arg(long, default_value = "out")]
        output: PathBuf,
    },
}

fn run(command: Command) -> Result<PathBuf, CliError> {
    match command {
        Command::Train(args) => {
            init_threads(thread_cap(args.threads));
            let cfg = load_config(&args.config, &args.overrides())?;
            cmd_train(&cfg)
        }
        Command::Grid(args) => {
            init_threads(thread_cap(args.threads));
            let cfg = load_config(&args.config, &args.overrides())?;
            cmd_grid(&cfg)
        }
        Command::Predict { run, model } => {
            init_threads(thread_cap(run.threads));
            let cfg = load_config(&run.config, &run.overrides())?;
            cmd_predict(&cfg, &model)
        }
        Command::Affinity { model, output, epsilon } => cmd_affinity(&model, &output, epsilon),
        Command::Bound { gamma, radius, kernels, samples, tasks, output } => {
            cmd_bound(gamma, radius, kernels, samples, tasks, &output)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(report) => println!("report written to {}", report.display()),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
