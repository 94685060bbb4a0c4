//! `stats`: quartile summary of image and text-box aspect ratios and
//! sizes over a record corpus, one CSV row per (subject, metric).

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use scoreclock::model::validate_record;
use scoreclock::ClockRecord;

use crate::clean::{csv_err, finish_csv};
use crate::error::CliError;
use crate::jsonl::{write_text, JsonlReader};
use crate::{Ctx, OutputFormat};

#[derive(Args, Debug)]
pub struct StatsArgs {
    /// Records to summarize (JSONL).
    #[arg(long)]
    pub input: PathBuf,
    /// Where to write the summary; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StatsRow {
    pub league: String,
    pub subject: String,
    pub metric: String,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

/// Lower quartile, median, upper quartile of unsorted values, using
/// medians of the exclusive lower and upper halves.
pub fn quartiles(values: &mut [f64]) -> (f64, f64, f64) {
    assert!(!values.is_empty(), "quartiles need at least one value");
    values.sort_by(f64::total_cmp);
    let median = median_of(values);
    if values.len() == 1 {
        return (values[0], median, values[0]);
    }
    let half = values.len() / 2;
    let q1 = median_of(&values[..half]);
    let q3 = median_of(&values[values.len() - half..]);
    (q1, median, q3)
}

fn median_of(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

pub fn run(args: &StatsArgs, ctx: &Ctx) -> Result<(), CliError> {
    let mut image = Measured::default();
    let mut text_box = Measured::default();
    let mut reader: JsonlReader<ClockRecord> = JsonlReader::open(&args.input)?;
    while let Some(record) = reader.next() {
        let record = record?;
        if let Err(violations) = validate_record(&record) {
            let message =
                violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ");
            return Err(CliError::schema(reader.path(), reader.line(), message));
        }
        image.push(record.clock_box.width(), record.clock_box.height());
        for detection in &record.detections {
            text_box.push(detection.bbox.width(), detection.bbox.height());
        }
    }
    if image.width.is_empty() {
        return Err(CliError::validation(reader.path(), "no records to summarize"));
    }

    let league = ctx.profile.profile.league_id.clone();
    let mut rows = Vec::new();
    for (subject, measured) in [("image", &mut image), ("text_box", &mut text_box)] {
        if measured.width.is_empty() {
            continue;
        }
        for (metric, values) in [
            ("aspect", &mut measured.aspect),
            ("width", &mut measured.width),
            ("height", &mut measured.height),
        ] {
            let (q1, median, q3) = quartiles(values);
            rows.push(StatsRow {
                league: league.clone(),
                subject: subject.to_string(),
                metric: metric.to_string(),
                q1,
                median,
                q3,
            });
        }
    }

    let rendered = match ctx.format(OutputFormat::Csv) {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in &rows {
                w.serialize(row).map_err(csv_err)?;
            }
            finish_csv(w)?
        }
        OutputFormat::Json => {
            let mut text = serde_json::to_string_pretty(&rows)
                .map_err(|e| CliError::io("<stats>", e.into()))?;
            text.push('\n');
            text
        }
    };
    write_text(args.output.as_deref(), &rendered)
}

#[derive(Default)]
struct Measured {
    aspect: Vec<f64>,
    width: Vec<f64>,
    height: Vec<f64>,
}

impl Measured {
    fn push(&mut self, width: f64, height: f64) {
        self.aspect.push(width / height);
        self.width.push(width);
        self.height.push(height);
    }
}
