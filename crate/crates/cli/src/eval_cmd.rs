//! `eval`: stream evaluation samples and emit the per-threshold metrics
//! table. Metrics follow the library's matching and aggregation exactly;
//! only the accumulation is streamed.

use std::path::PathBuf;

use clap::Args;

use scoreclock::eval::{
    e2e_match_sample, match_sample, matched_string_pairs, recognition_accuracy, Aggregation,
    ClassScope, EvalConfig, EvalRow, EvalSample, MatchResult,
};

use crate::clean::{csv_err, finish_csv};
use crate::error::CliError;
use crate::jsonl::{write_text, JsonlReader};
use crate::{Ctx, OutputFormat};

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Evaluation samples (JSONL), each carrying predictions and ground
    /// truth.
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated IoU thresholds; the default ladder when omitted.
    #[arg(long)]
    pub thresholds: Option<String>,
    #[arg(long, value_enum, default_value_t = AggregationArg::Micro)]
    pub aggregation: AggregationArg,
    /// Where to write the metrics table; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum AggregationArg {
    Micro,
    Macro,
}

impl From<AggregationArg> for Aggregation {
    fn from(aggregation: AggregationArg) -> Aggregation {
        match aggregation {
            AggregationArg::Micro => Aggregation::Micro,
            AggregationArg::Macro => Aggregation::Macro,
        }
    }
}

/// Running detection + e2e + accuracy tallies for one (threshold, scope)
/// cell, accumulated sample by sample in input order so the result
/// matches the in-memory evaluator bit for bit.
#[derive(Clone, Copy, Default)]
struct ScopeAccumulator {
    samples: u64,
    tp: u64,
    fp: u64,
    fn_: u64,
    e2e_tp: u64,
    e2e_fp: u64,
    e2e_fn: u64,
    sum_p: f64,
    sum_r: f64,
    sum_e2e_p: f64,
    sum_e2e_r: f64,
    correct: u64,
    incorrect: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ScopeAccumulator {
    fn absorb(&mut self, detection: &MatchResult, e2e: &MatchResult, correct: u64, total: u64) {
        self.samples += 1;
        self.tp += detection.tp;
        self.fp += detection.fp;
        self.fn_ += detection.fn_;
        self.e2e_tp += e2e.tp;
        self.e2e_fp += e2e.fp;
        self.e2e_fn += e2e.fn_;
        self.sum_p += ratio(detection.tp, detection.tp + detection.fp);
        self.sum_r += ratio(detection.tp, detection.tp + detection.fn_);
        self.sum_e2e_p += ratio(e2e.tp, e2e.tp + e2e.fp);
        self.sum_e2e_r += ratio(e2e.tp, e2e.tp + e2e.fn_);
        self.correct += correct;
        self.incorrect += total - correct;
    }

    /// `(p, r, acc, e2e_p, e2e_r)` under the chosen aggregation; accuracy
    /// is a pair-level metric and stays pooled.
    fn metrics(&self, aggregation: Aggregation) -> (f64, f64, f64, f64, f64) {
        let acc = ratio(self.correct, self.correct + self.incorrect);
        match aggregation {
            Aggregation::Micro => (
                ratio(self.tp, self.tp + self.fp),
                ratio(self.tp, self.tp + self.fn_),
                acc,
                ratio(self.e2e_tp, self.e2e_tp + self.e2e_fp),
                ratio(self.e2e_tp, self.e2e_tp + self.e2e_fn),
            ),
            Aggregation::Macro => {
                let n = self.samples as f64;
                (self.sum_p / n, self.sum_r / n, acc, self.sum_e2e_p / n, self.sum_e2e_r / n)
            }
        }
    }
}

pub fn run(args: &EvalArgs, ctx: &Ctx) -> Result<(), CliError> {
    let thresholds = resolve_thresholds(args)?;
    let config = EvalConfig { iou_thresholds: thresholds.clone(), ..EvalConfig::default() };
    config
        .validate()
        .map_err(|e| CliError::validation("--thresholds", e.to_string()))?;
    let aggregation = Aggregation::from(args.aggregation);

    let scopes = [ClassScope::SemanticOnly, ClassScope::AllClasses];
    let mut cells = vec![[ScopeAccumulator::default(); 2]; thresholds.len()];
    let mut reader: JsonlReader<EvalSample> = JsonlReader::open(&args.input)?;
    let mut n_samples: u64 = 0;
    while let Some(sample) = reader.next() {
        let sample = sample?;
        for labeled in sample.predictions.iter().chain(sample.ground_truth.iter()) {
            if let Some(message) = labeled.bbox.validity_error() {
                return Err(CliError::schema(reader.path(), reader.line(), message));
            }
        }
        n_samples += 1;
        for (t, threshold) in thresholds.iter().enumerate() {
            for (s, scope) in scopes.iter().enumerate() {
                let detection = match_sample(&sample, *threshold, *scope);
                let e2e = e2e_match_sample(&sample, *threshold, *scope);
                let pairs = matched_string_pairs(&sample, *threshold, *scope);
                let acc = recognition_accuracy(&pairs);
                cells[t][s].absorb(&detection, &e2e, acc.correct, acc.correct + acc.incorrect);
            }
        }
    }
    if n_samples == 0 {
        return Err(CliError::validation(reader.path(), "no evaluation samples"));
    }

    let mut rows = Vec::with_capacity(thresholds.len());
    for (t, threshold) in thresholds.iter().enumerate() {
        let (p_sc, r_sc, acc_sc, p_e2e_sc, r_e2e_sc) = cells[t][0].metrics(aggregation);
        let (p_ac, r_ac, acc_ac, p_e2e_ac, r_e2e_ac) = cells[t][1].metrics(aggregation);
        rows.push(EvalRow {
            iou: *threshold,
            p_sc,
            r_sc,
            p_ac,
            r_ac,
            acc_sc,
            acc_ac,
            p_e2e_sc,
            r_e2e_sc,
            p_e2e_ac,
            r_e2e_ac,
        });
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
            let mut text = String::new();
            for row in &rows {
                let line = serde_json::to_string(row)
                    .map_err(|e| CliError::io("<metrics>", e.into()))?;
                text.push_str(&line);
                text.push('\n');
            }
            text
        }
    };
    write_text(args.output.as_deref(), &rendered)
}

fn resolve_thresholds(args: &EvalArgs) -> Result<Vec<f64>, CliError> {
    match &args.thresholds {
        None => Ok(EvalConfig::default().iou_thresholds),
        Some(raw) => {
            let parsed: Option<Vec<f64>> =
                raw.split(',').map(|part| part.trim().parse().ok()).collect();
            parsed.ok_or_else(|| {
                CliError::validation(
                    "--thresholds",
                    format!("expected comma-separated numbers, got '{raw}'"),
                )
            })
        }
    }
}
