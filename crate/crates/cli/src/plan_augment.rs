//! `plan-augment`: histogram a corpus along one size axis and plan
//! per-image isotropic scales that even the bucket densities out.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use scoreclock::augment::{
    apply_plans, build_histogram, default_edges, density_variance, plan_augmentation,
    AugmentError, Axis, BucketHistogram,
};
use scoreclock::model::validate_record;
use scoreclock::ClockRecord;

use crate::error::CliError;
use crate::jsonl::{JsonlReader, JsonlWriter};
use crate::Ctx;

/// Fallback scale range when neither `--range` nor profile metadata
/// configures one.
const DEFAULT_RANGE: (f64, f64) = (0.4, 1.2);

#[derive(Args, Debug)]
pub struct PlanAugmentArgs {
    /// Records whose clock-crop sizes get histogrammed (JSONL).
    #[arg(long)]
    pub input: PathBuf,
    /// Where to write one plan per record (JSONL); stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Size axis to balance.
    #[arg(long, value_enum, default_value_t = AxisArg::Width)]
    pub axis: AxisArg,
    /// Comma-separated bucket edges, overriding profile metadata and the
    /// equal-width default.
    #[arg(long)]
    pub edges: Option<String>,
    /// Allowed scale range as "lo,hi", overriding profile metadata.
    #[arg(long)]
    pub range: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum AxisArg {
    Width,
    Height,
}

impl From<AxisArg> for Axis {
    fn from(axis: AxisArg) -> Axis {
        match axis {
            AxisArg::Width => Axis::Width,
            AxisArg::Height => Axis::Height,
        }
    }
}

#[derive(Serialize)]
struct PlanSummary {
    histogram: BucketHistogram,
    clipped: usize,
    infeasible: usize,
    pre_variance: f64,
    post_variance: f64,
}

pub fn run(args: &PlanAugmentArgs, ctx: &Ctx) -> Result<(), CliError> {
    let axis = Axis::from(args.axis);
    let range = resolve_range(args, ctx)?;

    let mut sizes: Vec<(f64, f64)> = Vec::new();
    let mut reader: JsonlReader<ClockRecord> = JsonlReader::open(&args.input)?;
    while let Some(record) = reader.next() {
        let record = record?;
        if let Err(violations) = validate_record(&record) {
            let message =
                violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ");
            return Err(CliError::schema(reader.path(), reader.line(), message));
        }
        sizes.push((record.clock_box.width(), record.clock_box.height()));
    }
    if sizes.is_empty() {
        return Err(CliError::validation(reader.path(), "no records to plan over"));
    }

    let edges = resolve_edges(args, ctx, &sizes, axis)?;
    let report = build_histogram(&sizes, &edges, axis).map_err(augment_err)?;
    let league_id = ctx.profile.profile.league_id.clone();
    let plans = plan_augmentation(&report.histogram, &sizes, &league_id, ctx.seed, range)
        .map_err(augment_err)?;

    let mut out = JsonlWriter::create(args.output.as_deref())?;
    for plan in &plans {
        out.write(plan)?;
    }
    out.finish()?;

    let replayed =
        build_histogram(&apply_plans(&sizes, &plans), &edges, axis).map_err(augment_err)?;
    let summary = PlanSummary {
        pre_variance: density_variance(&report.histogram.counts),
        post_variance: density_variance(&replayed.histogram.counts),
        clipped: report.clipped.len(),
        infeasible: plans.iter().filter(|p| p.infeasible).count(),
        histogram: report.histogram,
    };
    let line = serde_json::to_string(&summary).map_err(|e| CliError::io("<stderr>", e.into()))?;
    eprintln!("{line}");
    Ok(())
}

fn resolve_range(args: &PlanAugmentArgs, ctx: &Ctx) -> Result<(f64, f64), CliError> {
    if let Some(raw) = &args.range {
        let parts: Vec<&str> = raw.split(',').collect();
        let parsed: Option<(f64, f64)> = match parts.as_slice() {
            [lo, hi] => lo.trim().parse().ok().zip(hi.trim().parse().ok()),
            _ => None,
        };
        return parsed.ok_or_else(|| {
            CliError::validation("--range", format!("expected \"lo,hi\", got '{raw}'"))
        });
    }
    Ok(ctx.profile.metadata.augment_range.unwrap_or(DEFAULT_RANGE))
}

fn resolve_edges(
    args: &PlanAugmentArgs,
    ctx: &Ctx,
    sizes: &[(f64, f64)],
    axis: Axis,
) -> Result<Vec<f64>, CliError> {
    if let Some(raw) = &args.edges {
        let edges: Option<Vec<f64>> =
            raw.split(',').map(|part| part.trim().parse().ok()).collect();
        return edges.ok_or_else(|| {
            CliError::validation("--edges", format!("expected comma-separated numbers, got '{raw}'"))
        });
    }
    if let Some(edges) = &ctx.profile.metadata.bucket_edges {
        return Ok(edges.clone());
    }
    default_edges(sizes, axis).map_err(augment_err)
}

fn augment_err(e: AugmentError) -> CliError {
    match e {
        AugmentError::InvalidRange(_, _) | AugmentError::DegenerateHistogram => {
            CliError::Infeasible(e.to_string())
        }
        AugmentError::EmptyInput | AugmentError::InvalidEdges | AugmentError::MalformedHistogram => {
            CliError::validation("augment", e.to_string())
        }
    }
}
