//! `resize`: snap sizes onto the detector grid, or compare all three
//! rounding strategies over a size corpus.

use std::path::PathBuf;

use clap::Args;

use scoreclock::geometry::{
    compare_strategies, resize_with_strategy, GeometryError, ResizeStrategy, DEFAULT_BUCKET_WIDTH,
};
use scoreclock::model::validate_record;
use scoreclock::ClockRecord;

use crate::clean::{csv_err, finish_csv};
use crate::error::CliError;
use crate::jsonl::{write_text, JsonlReader};
use crate::{Ctx, OutputFormat};

#[derive(Args, Debug)]
pub struct ResizeArgs {
    /// Sizes to snap, as WIDTHxHEIGHT (e.g. 100x50).
    #[arg(value_name = "WxH")]
    pub sizes: Vec<String>,
    /// Also take sizes from these records' clock boxes (JSONL).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Grid multiple to snap to; the profile's grid when omitted.
    #[arg(long)]
    pub grid: Option<u32>,
    #[arg(long, value_enum, default_value_t = StrategyArg::Amalgamated)]
    pub strategy: StrategyArg,
    /// Emit the per-bucket strategy comparison table instead of resized
    /// sizes.
    #[arg(long)]
    pub compare: bool,
    /// Bucket width for --compare.
    #[arg(long, default_value_t = DEFAULT_BUCKET_WIDTH)]
    pub bucket_width: u32,
    /// Where to write results; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum StrategyArg {
    UpOnly,
    DownOnly,
    Amalgamated,
}

impl From<StrategyArg> for ResizeStrategy {
    fn from(strategy: StrategyArg) -> ResizeStrategy {
        match strategy {
            StrategyArg::UpOnly => ResizeStrategy::UpOnly,
            StrategyArg::DownOnly => ResizeStrategy::DownOnly,
            StrategyArg::Amalgamated => ResizeStrategy::Amalgamated,
        }
    }
}

pub fn parse_size(raw: &str) -> Result<(u32, u32), CliError> {
    let bad = || CliError::validation("size", format!("expected WIDTHxHEIGHT, got '{raw}'"));
    let (w, h) = raw.split_once(['x', 'X']).ok_or_else(bad)?;
    let width = w.trim().parse().map_err(|_| bad())?;
    let height = h.trim().parse().map_err(|_| bad())?;
    Ok((width, height))
}

pub fn run(args: &ResizeArgs, ctx: &Ctx) -> Result<(), CliError> {
    let mut sizes: Vec<(u32, u32)> = Vec::new();
    for raw in &args.sizes {
        sizes.push(parse_size(raw)?);
    }
    if let Some(path) = &args.input {
        let mut reader: JsonlReader<ClockRecord> = JsonlReader::open(path)?;
        while let Some(record) = reader.next() {
            let record = record?;
            if let Err(violations) = validate_record(&record) {
                let message =
                    violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ");
                return Err(CliError::schema(reader.path(), reader.line(), message));
            }
            let b = record.clock_box;
            sizes.push((b.width().round() as u32, b.height().round() as u32));
        }
    }
    if sizes.is_empty() {
        return Err(CliError::validation("resize", "no sizes given"));
    }
    let grid = args.grid.unwrap_or(ctx.profile.profile.grid);

    if args.compare {
        let comparison =
            compare_strategies(&sizes, grid, args.bucket_width).map_err(geometry_err)?;
        let rendered = match ctx.format(OutputFormat::Csv) {
            OutputFormat::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record([
                    "bucket_lo",
                    "bucket_hi",
                    "strategy",
                    "sizes",
                    "mean_aspect_distortion",
                    "mean_dim_distortion",
                    "strictly_best",
                ])
                .map_err(csv_err)?;
                for row in &comparison.rows {
                    w.write_record([
                        row.bucket.0.to_string(),
                        row.bucket.1.to_string(),
                        row.strategy.name().to_string(),
                        row.sizes.to_string(),
                        row.mean_aspect_distortion.to_string(),
                        row.mean_dim_distortion.to_string(),
                        row.strictly_best.to_string(),
                    ])
                    .map_err(csv_err)?;
                }
                finish_csv(w)?
            }
            OutputFormat::Json => {
                let mut text = serde_json::to_string_pretty(&comparison)
                    .map_err(|e| CliError::io("<compare>", e.into()))?;
                text.push('\n');
                text
            }
        };
        return write_text(args.output.as_deref(), &rendered);
    }

    let strategy = ResizeStrategy::from(args.strategy);
    let mut lines = String::new();
    for (w, h) in &sizes {
        let decision = resize_with_strategy(*w, *h, grid, strategy).map_err(geometry_err)?;
        lines.push_str(&format!("{}x{}\n", decision.resized.0, decision.resized.1));
    }
    write_text(args.output.as_deref(), &lines)
}

fn geometry_err(e: GeometryError) -> CliError {
    CliError::validation("resize", e.to_string())
}
