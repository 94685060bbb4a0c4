//! `synth`: generate synthetic scoreboard videos with known ground truth,
//! optionally corrupted by a seeded noise model.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use scoreclock::synth::{corrupt, generate_game, CorruptionEvent, NoiseSpec};

use crate::error::CliError;
use crate::jsonl::JsonlWriter;
use crate::Ctx;

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Where to write the (possibly corrupted) records (JSONL); stdout
    /// when omitted.
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// Optional file for the ground-truth readings (JSONL).
    #[arg(long)]
    pub readings: Option<PathBuf>,
    /// Optional file for the matching play-by-play feed (JSONL).
    #[arg(long)]
    pub feed: Option<PathBuf>,
    /// Optional file for the corruption log (JSONL).
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Frames per video.
    #[arg(long, default_value_t = 600)]
    pub frames: usize,
    /// Video frame rate; frame timestamps are frame / fps.
    #[arg(long, default_value_t = 1)]
    pub fps: u32,
    /// Videos to generate; seeds step from --seed.
    #[arg(long, default_value_t = 1)]
    pub videos: usize,
    /// Probability a detection gets one character confused.
    #[arg(long, default_value_t = 0.0)]
    pub char_rate: f64,
    /// Maximum per-axis box jitter in pixels.
    #[arg(long, default_value_t = 0.0)]
    pub jitter_px: f64,
    /// Probability a detection is dropped.
    #[arg(long, default_value_t = 0.0)]
    pub drop_rate: f64,
    /// Probability an eligible time reading jumps by an hour.
    #[arg(long, default_value_t = 0.0)]
    pub spike_rate: f64,
}

#[derive(Serialize)]
struct LoggedEvent<'a> {
    video_id: &'a str,
    event: &'a CorruptionEvent,
}

pub fn run(args: &SynthArgs, ctx: &Ctx) -> Result<(), CliError> {
    if args.videos == 0 {
        return Err(CliError::validation("--videos", "must generate at least one video"));
    }
    let mut records_out = JsonlWriter::create(args.records.as_deref())?;
    let mut readings_out = optional_writer(args.readings.as_deref())?;
    let mut feed_out = optional_writer(args.feed.as_deref())?;
    let mut log_out = optional_writer(args.log.as_deref())?;

    for v in 0..args.videos {
        let seed = ctx.seed.wrapping_add(v as u64);
        let game = generate_game(&ctx.profile.profile, args.frames, args.fps, seed);
        let spec = NoiseSpec {
            char_substitution_rate: args.char_rate,
            box_jitter_px: args.jitter_px,
            drop_detection_rate: args.drop_rate,
            time_spike_rate: args.spike_rate,
            seed,
        };
        if let Some(message) = spec.validity_error() {
            return Err(CliError::validation("noise", message));
        }
        let (records, log) = corrupt(&game.records, &spec);
        for record in &records {
            records_out.write(record)?;
        }
        if let Some(out) = readings_out.as_mut() {
            for reading in &game.readings {
                out.write(reading)?;
            }
        }
        if let Some(out) = feed_out.as_mut() {
            for event in &game.feed {
                out.write(event)?;
            }
        }
        if let Some(out) = log_out.as_mut() {
            for event in &log {
                out.write(&LoggedEvent { video_id: &game.video_id, event })?;
            }
        }
    }

    records_out.finish()?;
    for out in [readings_out, feed_out, log_out].into_iter().flatten() {
        out.finish()?;
    }
    Ok(())
}

fn optional_writer(path: Option<&std::path::Path>) -> Result<Option<JsonlWriter>, CliError> {
    path.map(|p| JsonlWriter::create(Some(p))).transpose()
}
