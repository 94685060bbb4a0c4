//! `align`: match distilled readings against a play-by-play feed,
//! emitting one segment per run and a final stats object on stdout.

use std::path::PathBuf;

use clap::Args;

use scoreclock::align::{
    align_segments, segment_readings, AlignmentStats, FeedIndex, PlayEvent, DEFAULT_MAX_FRAME_GAP,
};
use scoreclock::kc::KcOutcome;
use scoreclock::GameClockReading;

use crate::error::CliError;
use crate::jsonl::{JsonlReader, JsonlWriter};
use crate::pool::{map_batch, VideoBatcher};
use crate::Ctx;

#[derive(Args, Debug)]
pub struct AlignArgs {
    /// Distilled outcomes from `clean` (JSONL); readings are taken from
    /// every outcome that kept one.
    #[arg(long)]
    pub readings: PathBuf,
    /// Play-by-play feed (JSONL).
    #[arg(long)]
    pub feed: PathBuf,
    /// Where to write aligned segments (JSONL); stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Frame-id gap above which a run breaks even on a matching key.
    #[arg(long, default_value_t = DEFAULT_MAX_FRAME_GAP)]
    pub max_gap: i64,
}

pub fn run(args: &AlignArgs, _ctx: &Ctx) -> Result<(), CliError> {
    let mut feed: Vec<PlayEvent> = Vec::new();
    let mut feed_reader: JsonlReader<PlayEvent> = JsonlReader::open(&args.feed)?;
    while let Some(event) = feed_reader.next() {
        let event = event?;
        if let Some(message) = event.validity_error() {
            return Err(CliError::schema(feed_reader.path(), feed_reader.line(), message));
        }
        feed.push(event);
    }
    let index = FeedIndex::new(&feed);

    let mut reader: JsonlReader<KcOutcome> = JsonlReader::open(&args.readings)?;
    let mut out = JsonlWriter::create(args.output.as_deref())?;
    let max_gap = args.max_gap;

    let mut total: u64 = 0;
    let mut aligned: u64 = 0;
    let mut unmatched: u64 = 0;
    let mut ambiguous: u64 = 0;
    let mut frame_span: u64 = 0;

    {
        let mut batcher =
            VideoBatcher::new(|batch: Vec<(String, Vec<GameClockReading>)>| {
                let per_video = map_batch(batch, &|(id, mut readings)| {
                    readings.sort_by_key(|r| r.source_frame_id);
                    align_segments(&id, &segment_readings(&readings, max_gap), &index)
                });
                for segments in per_video {
                    for segment in segments {
                        total += 1;
                        match segment.ambiguity {
                            0 => unmatched += 1,
                            1 => aligned += 1,
                            _ => ambiguous += 1,
                        }
                        frame_span += (segment.frame_end - segment.frame_start + 1) as u64;
                        out.write(&segment)?;
                    }
                }
                Ok(())
            });
        while let Some(outcome) = reader.next() {
            let outcome = outcome?;
            if let Some(reading) = outcome.reading {
                let video_id = outcome.record.video_id;
                batcher.push(&video_id, reading, reader.path(), reader.line())?;
            }
        }
        batcher.finish()?;
    }
    out.finish()?;

    let stats = if total == 0 {
        AlignmentStats { empty: true, ..AlignmentStats::default() }
    } else {
        let pct = |n: u64| n as f64 / total as f64 * 100.0;
        AlignmentStats {
            total_runs: total,
            aligned,
            unmatched,
            ambiguous,
            aligned_pct: pct(aligned),
            unmatched_pct: pct(unmatched),
            ambiguous_pct: pct(ambiguous),
            mean_run_length: frame_span as f64 / total as f64,
            empty: false,
        }
    };
    let line = serde_json::to_string(&stats).map_err(|e| CliError::io("<stdout>", e.into()))?;
    println!("{line}");
    Ok(())
}
