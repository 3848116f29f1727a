use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nnlmf_cli::config::parse_config;
use nnlmf_cli::error::CliError;
use nnlmf_cli::run::{run_experiment, Mode};
use nnlmf_cli::table::OutputFormat;

/// Adaptive-filter experiment runner: simulated and model-predicted
/// learning curves, stability maps, and noise moment reports.
#[derive(Parser)]
#[command(name = "nnlmf", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo ensemble and emit simulated curves
    Simulate(RunArgs),
    /// Emit model-predicted curves without simulating
    Model(RunArgs),
    /// Run both and emit curves plus per-iteration deviations
    Compare(RunArgs),
    /// Classify the (step-size × initial-distance) grid empirically
    Stability(StabilityArgs),
    /// Report the noise moment triple and SNR
    Moments(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON). A manifest from a previous run works too.
    #[arg(long)]
    config: PathBuf,
    /// Output file path
    #[arg(long)]
    out: PathBuf,
    /// Override the config's master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's output format
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Args)]
struct StabilityArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Use the full-scale per-cell effort (1000 realizations of 5e5 samples)
    #[arg(long)]
    paper_scale: bool,
}

fn execute(mode: Mode, args: &RunArgs, paper_scale: bool) -> Result<usize, CliError> {
    let text = fs::read_to_string(&args.config)
        .map_err(|source| CliError::Io { path: args.config.clone(), source })?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(format) = args.format {
        cfg.format = format;
    }
    if paper_scale {
        cfg.stability.apply_paper_scale();
    }
    cfg.validate()?;

    let summary = run_experiment(&cfg, mode, &args.out)?;
    eprintln!(
        "wrote {} and {}",
        summary.output_path.display(),
        summary.manifest_path.display()
    );
    if summary.divergent_realizations > 0 {
        eprintln!(
            "note: {} realization(s) diverged and were excluded from the averages",
            summary.divergent_realizations
        );
    }
    if let Some(dev) = summary.deviation {
        eprintln!(
            "tail window {}: max |theory - sim| weight deviation {:.6}, max EMSE deviation {:.4} dB",
            dev.tail_window, dev.max_weight_deviation, dev.max_emse_deviation_db
        );
    }
    if summary.failed_cells > 0 {
        eprintln!("error: {} grid cell(s) failed", summary.failed_cells);
    }
    Ok(summary.failed_cells)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args, paper_scale) = match &cli.command {
        Command::Simulate(args) => (Mode::Simulate, args, false),
        Command::Model(args) => (Mode::Model, args, false),
        Command::Compare(args) => (Mode::Compare, args, false),
        Command::Stability(args) => (Mode::Stability, &args.run, args.paper_scale),
        Command::Moments(args) => (Mode::Moments, args, false),
    };
    match execute(mode, args, paper_scale) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
