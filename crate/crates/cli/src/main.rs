//! Scoreboard-clock toolkit: distill noisy OCR into clean labels, align
//! readings with play-by-play feeds, and plan the supporting dataset
//! work (stats, augmentation, grid resizing, evaluation, synthesis).

use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod align_cmd;
mod clean;
mod error;
mod eval_cmd;
mod jsonl;
mod plan_augment;
mod pool;
mod profile;
mod resize_cmd;
mod stats_cmd;
mod synth_cmd;

use error::CliError;
use profile::ResolvedProfile;

#[derive(Parser, Debug)]
#[command(name = "scoreclock", version, about)]
struct Cli {
    /// RNG seed shared by every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Built-in league id (nba, soccer) or path to a profile file.
    #[arg(long, global = true, default_value = "nba")]
    profile: String,
    /// League to pick from a multi-league profile file.
    #[arg(long, global = true)]
    league: Option<String>,
    /// Output format for reports and tables; each command has a natural
    /// default.
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Distill noisy OCR records into clean clock labels.
    Clean(clean::CleanArgs),
    /// Align distilled readings with a play-by-play feed.
    Align(align_cmd::AlignArgs),
    /// Summarize image and text-box size distributions.
    Stats(stats_cmd::StatsArgs),
    /// Plan isotropic rescales that balance size-bucket densities.
    PlanAugment(plan_augment::PlanAugmentArgs),
    /// Snap sizes onto the detector grid, or compare strategies.
    Resize(resize_cmd::ResizeArgs),
    /// Score predictions against ground truth boxes and strings.
    Eval(eval_cmd::EvalArgs),
    /// Generate synthetic games with known ground truth.
    Synth(synth_cmd::SynthArgs),
}

/// Flags shared by every command, with the profile resolved eagerly.
pub struct Ctx {
    pub seed: u64,
    pub profile: ResolvedProfile,
    format: Option<OutputFormat>,
}

impl Ctx {
    /// The requested output format, or the command's natural default.
    pub fn format(&self, natural: OutputFormat) -> OutputFormat {
        self.format.unwrap_or(natural)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let ctx = Ctx {
        seed: cli.seed,
        profile: profile::resolve(&cli.profile, cli.league.as_deref())?,
        format: cli.format,
    };
    match &cli.command {
        Command::Clean(args) => clean::run(args, &ctx),
        Command::Align(args) => align_cmd::run(args, &ctx),
        Command::Stats(args) => stats_cmd::run(args, &ctx),
        Command::PlanAugment(args) => plan_augment::run(args, &ctx),
        Command::Resize(args) => resize_cmd::run(args, &ctx),
        Command::Eval(args) => eval_cmd::run(args, &ctx),
        Command::Synth(args) => synth_cmd::run(args, &ctx),
    }
}
