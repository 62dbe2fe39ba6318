//! `ditscale`: scaling-law fitting, compute-optimal planning, and the SGD
//! oracle as reproducible batch commands.
//!
//! Every subcommand is a deterministic function of its inputs, the config,
//! and the seed; identical invocations produce byte-identical artifacts.
//! Exit codes: 0 success, 2 usage or validation failure, 3 numeric failure
//! (with a diagnostic JSON line on stderr).

mod artifacts;
mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Ctx, Format};
use config::WorkspaceConfig;
use ditscale::presets;

#[derive(Parser)]
#[command(
    name = "ditscale",
    version,
    about = "Scaling-law toolkit for diffusion transformers"
)]
struct Cli {
    /// Workspace config JSON (width_ratio, n_ctx, n_text, preset, units)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for emitted artifacts
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Seed for every stochastic component
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Format for tabular artifacts
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit optimal batch-size and learning-rate laws from training runs
    FitHparams {
        /// Run file (.csv or .json)
        #[arg(long)]
        runs: PathBuf,
        /// Near-optimal selection tolerance relative to each group minimum
        #[arg(long, default_value_t = 2e-4)]
        rel_tol: f64,
    },
    /// Fit the loss surface L(T, N) from training runs
    FitLoss {
        #[arg(long)]
        runs: PathBuf,
        #[arg(long, default_value_t = 2e-4)]
        rel_tol: f64,
    },
    /// IsoFLOP profiles and optimal-size laws
    Isoflop {
        /// Run file for the empirical route
        #[arg(long)]
        runs: Option<PathBuf>,
        /// Surface for the predicted route: preset name
        /// (video-optimal | video-fixed | image) or a law JSON path
        #[arg(long)]
        surface: Option<String>,
        /// Compute budgets in FLOPs
        #[arg(long, value_delimiter = ',')]
        budgets: Option<Vec<f64>>,
        /// Evaluate the constrained data term verbatim (no exponent)
        /// instead of the exponentiated default
        #[arg(long)]
        verbatim_constraint: bool,
    },
    /// Full training plan for a compute budget from the published laws
    Plan {
        /// Compute budget in FLOPs
        #[arg(long)]
        budget: f64,
    },
    /// Run the SGD oracle from a spec file (trajectory, sweep, or synth)
    Simulate {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Published-constant comparisons; optionally compare two fitted laws
    Report {
        /// Two law JSON files to compare (empirical first)
        #[arg(long, num_args = 2)]
        laws: Option<Vec<PathBuf>>,
    },
}

fn run(cli: Cli) -> ditscale::Result<()> {
    let config = WorkspaceConfig::load(cli.config.as_deref())?;
    let ctx = Ctx {
        config,
        out: cli.out,
        seed: cli.seed,
        format: cli.format,
    };
    match cli.command {
        Command::FitHparams { runs, rel_tol } => commands::fit::fit_hparams(&ctx, &runs, rel_tol),
        Command::FitLoss { runs, rel_tol } => commands::fit::fit_loss(&ctx, &runs, rel_tol),
        Command::Isoflop {
            runs,
            surface,
            budgets,
            verbatim_constraint,
        } => {
            let budgets = budgets.unwrap_or_else(|| presets::ISOFLOP_BUDGETS.to_vec());
            commands::isoflop::isoflop(
                &ctx,
                runs.as_deref(),
                surface.as_deref(),
                &budgets,
                verbatim_constraint,
            )
        }
        Command::Plan { budget } => commands::plan::plan(&ctx, budget),
        Command::Simulate { spec } => commands::simulate::simulate(&ctx, &spec),
        Command::Report { laws } => {
            let pair = laws.as_ref().map(|v| (v[0].as_path(), v[1].as_path()));
            commands::report::report(&ctx, pair)
        }
    }
}

/// Usage and validation problems exit 2; numeric failures exit 3 with a
/// diagnostic JSON line on stderr.
fn classify(err: &ditscale::Error) -> u8 {
    use ditscale::Error::*;
    match err {
        Domain(_) | Parse { .. } | Validation { .. } | Io(_) | Json(_) => 2,
        Singular(_)
        | NoInteriorMinimum(_)
        | NonConvergence { .. }
        | UnboundedStep
        | Dimension(_) => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = classify(&err);
            if code == 3 {
                eprintln!(
                    "{}",
                    serde_json::json!({ "error": err.to_string(), "kind": "numeric" })
                );
            } else {
                eprintln!("error: {err}");
            }
            ExitCode::from(code)
        }
    }
}
