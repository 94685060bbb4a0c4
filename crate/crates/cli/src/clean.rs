//! `clean`: stream noisy OCR records through validation and label
//! distillation, writing one outcome per record plus a distillation
//! report and the hard-negative id list.

use std::path::PathBuf;

use clap::Args;

use scoreclock::kc::{distill_video, DistillReport, Kc4Mode, VideoDistill};
use scoreclock::model::validate_record;
use scoreclock::ClockRecord;

use crate::error::CliError;
use crate::jsonl::{write_text, JsonlReader, JsonlWriter};
use crate::pool::{map_batch, VideoBatcher};
use crate::{Ctx, OutputFormat};

#[derive(Args, Debug)]
pub struct CleanArgs {
    /// Noisy records to distill (JSONL).
    #[arg(long)]
    pub input: PathBuf,
    /// Where to write per-record outcomes (JSONL); stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Where to write the distillation report; stdout when omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Optional file for hard-negative record ids, one per line.
    #[arg(long)]
    pub hard_negatives: Option<PathBuf>,
    /// What to do with temporal-consistency violations.
    #[arg(long, value_enum, default_value_t = ModeArg::Discard)]
    pub mode: ModeArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ModeArg {
    Discard,
    Correct,
}

impl From<ModeArg> for Kc4Mode {
    fn from(mode: ModeArg) -> Kc4Mode {
        match mode {
            ModeArg::Discard => Kc4Mode::Discard,
            ModeArg::Correct => Kc4Mode::Correct,
        }
    }
}

pub fn run(args: &CleanArgs, ctx: &Ctx) -> Result<(), CliError> {
    let mode = Kc4Mode::from(args.mode);
    let profile = &ctx.profile.profile;
    let mut reader: JsonlReader<ClockRecord> = JsonlReader::open(&args.input)?;
    let mut out = JsonlWriter::create(args.output.as_deref())?;
    let mut report = DistillReport::default();

    {
        let mut batcher = VideoBatcher::new(|batch: Vec<(String, Vec<ClockRecord>)>| {
            let parts: Vec<VideoDistill> = map_batch(batch, &|(id, records)| {
                distill_video(&id, &records, profile, mode)
            });
            for part in parts {
                for outcome in &part.outcomes {
                    out.write(outcome)?;
                }
                report.totals.absorb(&part.counts);
                report.per_video.insert(part.video_id, part.counts);
                report.hard_negative_ids.extend(part.hard_negative_ids);
            }
            Ok(())
        });
        while let Some(record) = reader.next() {
            let record = record?;
            if let Err(violations) = validate_record(&record) {
                let message = violations
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join("; ");
                return Err(CliError::schema(reader.path(), reader.line(), message));
            }
            let video_id = record.video_id.clone();
            batcher.push(&video_id, record, reader.path(), reader.line())?;
        }
        batcher.finish()?;
    }
    out.finish()?;

    if let Some(path) = &args.hard_negatives {
        let mut ids = report.hard_negative_ids.join("\n");
        if !ids.is_empty() {
            ids.push('\n');
        }
        write_text(Some(path), &ids)?;
    }
    let rendered = match ctx.format(OutputFormat::Json) {
        OutputFormat::Json => render_report_json(&report)?,
        OutputFormat::Csv => render_report_csv(&report)?,
    };
    write_text(args.report.as_deref(), &rendered)
}

fn render_report_json(report: &DistillReport) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::io("<report>", e.into()))?;
    text.push('\n');
    Ok(text)
}

fn render_report_csv(report: &DistillReport) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header =
        ["video_id", "noisy_total", "clean", "rejected_kc1", "rejected_kc4", "corrected", "short_runs"];
    w.write_record(header).map_err(csv_err)?;
    for (video_id, c) in &report.per_video {
        w.write_record([
            video_id.as_str(),
            &c.noisy_total.to_string(),
            &c.clean.to_string(),
            &c.rejected_kc1.to_string(),
            &c.rejected_kc4.to_string(),
            &c.corrected.to_string(),
            &c.short_runs.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let t = &report.totals;
    w.write_record([
        "total",
        &t.noisy_total.to_string(),
        &t.clean.to_string(),
        &t.rejected_kc1.to_string(),
        &t.rejected_kc4.to_string(),
        &t.corrected.to_string(),
        &t.short_runs.to_string(),
    ])
    .map_err(csv_err)?;
    finish_csv(w)
}

pub fn csv_err(e: csv::Error) -> CliError {
    CliError::io("<csv>", std::io::Error::other(e))
}

pub fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String, CliError> {
    let bytes = w.into_inner().map_err(|e| CliError::io("<csv>", std::io::Error::other(e)))?;
    String::from_utf8(bytes).map_err(|e| CliError::io("<csv>", std::io::Error::other(e)))
}
