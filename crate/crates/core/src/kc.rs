//! Knowledge constraints over clock records and the distillation loop
//! that turns noisy recognizer output into clean labels.
//!
//! Four checks run in sequence. Existence (`kc1_check`): a real game
//! clock shows at least two distinct teams, a time, and a period marker.
//! Time selection (`kc3_select_time`): when several texts parse as
//! times, the league's surface-form priority picks the game clock over
//! shot or stat clocks. Quarter resolution (`kc2_resolve_quarter`): the
//! quarter text nearest the selected time wins. Temporal consistency
//! (`kc4_temporal_filter`): within a run of constant teams and quarter,
//! clock readings must move in the league's direction; violators are
//! dropped or interpolated. Records failing existence become hard
//! negatives for detector retraining.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{
    ClockRecord, GameClockReading, LeagueProfile, MonotonicDirection, Period, SemanticClass,
};
use crate::surface_form::{classify, time_to_seconds, ClassLabel, ClassifiedText};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum KcError {
    #[error("no quarter candidate")]
    NoQuarterCandidate,
    #[error("no time candidate")]
    NoTimeCandidate,
}

/// Whether temporal violations are dropped or repaired.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kc4Mode {
    Discard,
    Correct,
}

/// Final disposition of one record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KcStatus {
    CleanLabel,
    RejectKc1,
    RejectKc4,
    CorrectedKc4,
}

/// One record's outcome: its status, plus the distilled reading when the
/// record survived and the reason when it did not.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KcOutcome {
    pub record: ClockRecord,
    pub status: KcStatus,
    pub reading: Option<GameClockReading>,
    pub reject_reason: Option<String>,
}

/// Status tallies; `clean` includes corrected records, so
/// `noisy_total = clean + rejected_kc1 + rejected_kc4` always holds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoCounts {
    pub noisy_total: u64,
    pub clean: u64,
    pub rejected_kc1: u64,
    pub rejected_kc4: u64,
    pub corrected: u64,
    /// Runs shorter than the temporal window, passed through unfiltered.
    pub short_runs: u64,
}

impl VideoCounts {
    pub fn absorb(&mut self, other: &VideoCounts) {
        self.noisy_total += other.noisy_total;
        self.clean += other.clean;
        self.rejected_kc1 += other.rejected_kc1;
        self.rejected_kc4 += other.rejected_kc4;
        self.corrected += other.corrected;
        self.short_runs += other.short_runs;
    }

    pub fn is_partition(&self) -> bool {
        self.noisy_total == self.clean + self.rejected_kc1 + self.rejected_kc4
    }
}

/// Corpus-level distillation summary.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DistillReport {
    pub totals: VideoCounts,
    pub per_video: BTreeMap<String, VideoCounts>,
    /// Ids (`video#frame`) of existence-check failures, for hard
    /// negative mining.
    pub hard_negative_ids: Vec<String>,
}

/// Stable record identifier used in reports and exported id lists.
pub fn record_id(record: &ClockRecord) -> String {
    format!("{}#{}", record.video_id, record.frame_id)
}

/// Existence-check result with the classified texts that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct Kc1Assessment {
    pub passed: bool,
    pub classified: Vec<ClassifiedText>,
    pub distinct_teams: usize,
    pub quarter_texts: usize,
    pub time_texts: usize,
}

impl Kc1Assessment {
    pub fn failure_reason(&self) -> Option<String> {
        if self.passed {
            return None;
        }
        Some(format!(
            "existence check failed: {} distinct team, {} quarter, {} time texts",
            self.distinct_teams, self.quarter_texts, self.time_texts
        ))
    }
}

/// Checks that the record shows a complete clock: at least two distinct
/// teams, at least one time, and at least one quarter text. Leagues with
/// a continuous clock have no quarter text; there the time reading
/// itself carries the period evidence.
pub fn kc1_check(record: &ClockRecord, profile: &LeagueProfile) -> Kc1Assessment {
    let classified: Vec<ClassifiedText> = record
        .detections
        .iter()
        .map(|d| classify(d, profile))
        .collect();
    let mut teams = BTreeSet::new();
    let mut quarters = 0usize;
    let mut times = 0usize;
    for c in &classified {
        match &c.label {
            ClassLabel::Team { abbrev } => {
                teams.insert(abbrev.clone());
            }
            ClassLabel::Quarter { .. } => quarters += 1,
            ClassLabel::Time { .. } => times += 1,
            ClassLabel::Other => {}
        }
    }
    let quarter_ok = if profile.continuous_time { times >= 1 } else { quarters >= 1 };
    Kc1Assessment {
        passed: teams.len() >= 2 && quarter_ok && times >= 1,
        classified,
        distinct_teams: teams.len(),
        quarter_texts: quarters,
        time_texts: times,
    }
}

fn center_distance(a: &ClassifiedText, b: &ClassifiedText) -> f64 {
    let (ax, ay) = a.detection.bbox.center();
    let (bx, by) = b.detection.bbox.center();
    ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt()
}

/// Picks the quarter candidate nearest the selected time text by box
/// center distance; ties go to the smaller `x_min`, then smaller `y_min`.
pub fn kc2_resolve_quarter<'a>(
    candidates: &'a [ClassifiedText],
    selected_time: &ClassifiedText,
) -> Result<&'a ClassifiedText, KcError> {
    candidates
        .iter()
        .filter(|c| matches!(c.label, ClassLabel::Quarter { .. }))
        .min_by(|a, b| {
            center_distance(a, selected_time)
                .total_cmp(&center_distance(b, selected_time))
                .then(a.detection.bbox.x_min.total_cmp(&b.detection.bbox.x_min))
                .then(a.detection.bbox.y_min.total_cmp(&b.detection.bbox.y_min))
        })
        .ok_or(KcError::NoQuarterCandidate)
}

/// Picks the time candidate whose surface form ranks earliest in the
/// profile's priority list. Forms missing from the list rank last.
/// Equal-priority candidates resolve to the larger box (the main game
/// clock dwarfs shot and stat clocks), then by position for determinism.
pub fn kc3_select_time<'a>(
    candidates: &'a [ClassifiedText],
    profile: &LeagueProfile,
) -> Result<&'a ClassifiedText, KcError> {
    let rank = |c: &ClassifiedText| -> usize {
        match &c.label {
            ClassLabel::Time { form } => profile
                .time_form_priority
                .iter()
                .position(|id| *id == form.form_id())
                .unwrap_or(profile.time_form_priority.len()),
            _ => usize::MAX,
        }
    };
    candidates
        .iter()
        .filter(|c| matches!(c.label, ClassLabel::Time { .. }))
        .min_by(|a, b| {
            rank(a)
                .cmp(&rank(b))
                .then(b.detection.bbox.area().total_cmp(&a.detection.bbox.area()))
                .then(a.detection.bbox.x_min.total_cmp(&b.detection.bbox.x_min))
                .then(a.detection.bbox.y_min.total_cmp(&b.detection.bbox.y_min))
        })
        .ok_or(KcError::NoTimeCandidate)
}

fn in_direction(direction: MonotonicDirection, a: f64, b: f64) -> bool {
    match direction {
        MonotonicDirection::Decreasing => a >= b,
        MonotonicDirection::Increasing => a <= b,
    }
}

/// Temporal filter output for one run.
#[derive(Clone, Debug, PartialEq)]
pub struct Kc4Result {
    /// Surviving readings in frame order, corrections applied in place.
    pub kept: Vec<GameClockReading>,
    /// Frame ids whose time was replaced by interpolation.
    pub corrected_frames: Vec<i64>,
    pub rejected: Vec<(GameClockReading, String)>,
    /// Set when the run was too short to filter and passed through.
    pub too_short: bool,
}

struct IndexedKc4 {
    kept: Vec<(usize, GameClockReading, bool)>,
    rejected: Vec<(usize, GameClockReading, String)>,
    too_short: bool,
}

/// Pass 1: slide a 3-frame window. A middle reading off the monotone
/// corridor between consistent neighbors is interpolated (Correct) or
/// dropped (Discard); when the neighbors themselves disagree the middle
/// is dropped and the window re-evaluated, which dissolves bursts of
/// consecutive corruption. Pass 2: windowing alone cannot make a
/// sequence with a corrupt head or tail monotone, so the longest
/// still-monotone subsequence is kept and the residue rejected.
fn filter_run_indexed(
    run: &[(usize, GameClockReading)],
    direction: MonotonicDirection,
    mode: Kc4Mode,
) -> IndexedKc4 {
    if run.len() < 3 {
        return IndexedKc4 {
            kept: run.iter().map(|(i, r)| (*i, r.clone(), false)).collect(),
            rejected: Vec::new(),
            too_short: true,
        };
    }

    let mut work: Vec<(usize, GameClockReading, bool)> =
        run.iter().map(|(i, r)| (*i, r.clone(), false)).collect();
    let mut rejected: Vec<(usize, GameClockReading, String)> = Vec::new();
    let mut i = 0;
    while i + 2 < work.len() {
        let (ta, fa) = (work[i].1.time_s, work[i].1.source_frame_id);
        let tb = work[i + 1].1.time_s;
        let (tc, fc) = (work[i + 2].1.time_s, work[i + 2].1.source_frame_id);
        if in_direction(direction, ta, tb) && in_direction(direction, tb, tc) {
            i += 1;
            continue;
        }
        if in_direction(direction, ta, tc) {
            if mode == Kc4Mode::Correct {
                let fb = work[i + 1].1.source_frame_id;
                let t = if fc == fa {
                    (ta + tc) / 2.0
                } else {
                    ta + (tc - ta) * (fb - fa) as f64 / (fc - fa) as f64
                };
                work[i + 1].1.time_s = t;
                work[i + 1].2 = true;
                i += 1;
            } else {
                let (idx, reading, _) = work.remove(i + 1);
                rejected.push((
                    idx,
                    reading,
                    format!("outside the monotone corridor between frames {fa} and {fc}"),
                ));
            }
        } else {
            let (idx, reading, _) = work.remove(i + 1);
            rejected.push((
                idx,
                reading,
                format!("neighbors at frames {fa} and {fc} disagree on direction"),
            ));
        }
    }

    let keep = longest_monotone_chain(
        &work.iter().map(|(_, r, _)| r.time_s).collect::<Vec<_>>(),
        direction,
    );
    let mut kept = Vec::with_capacity(keep.len());
    for (pos, entry) in work.into_iter().enumerate() {
        if keep.contains(&pos) {
            kept.push(entry);
        } else {
            rejected.push((
                entry.0,
                entry.1,
                "non-monotone residue after windowing".to_string(),
            ));
        }
    }
    rejected.sort_by_key(|(idx, _, _)| *idx);
    IndexedKc4 { kept, rejected, too_short: false }
}

/// Indices of the longest subsequence monotone in `direction`, preferring
/// the earliest such chain.
fn longest_monotone_chain(times: &[f64], direction: MonotonicDirection) -> Vec<usize> {
    let n = times.len();
    if n == 0 {
        return Vec::new();
    }
    let mut len = vec![1usize; n];
    let mut next = vec![usize::MAX; n];
    for i in (0..n).rev() {
        for j in i + 1..n {
            if in_direction(direction, times[i], times[j]) && len[j] + 1 > len[i] {
                len[i] = len[j] + 1;
                next[i] = j;
            }
        }
    }
    let best = *len.iter().max().expect("non-empty");
    let start = len.iter().position(|l| *l == best).expect("max exists");
    let mut chain = Vec::with_capacity(best);
    let mut at = start;
    while at != usize::MAX {
        chain.push(at);
        at = next[at];
    }
    chain
}

/// Filters one run of readings with constant teams and quarter, ordered
/// by frame. Runs shorter than the 3-frame window pass through with
/// `too_short` set. Output is always monotone in the profile direction
/// once the window has been applied.
pub fn kc4_temporal_filter(
    seq: &[GameClockReading],
    profile: &LeagueProfile,
    mode: Kc4Mode,
) -> Kc4Result {
    let indexed: Vec<(usize, GameClockReading)> =
        seq.iter().cloned().enumerate().collect();
    let out = filter_run_indexed(&indexed, profile.monotonic_direction, mode);
    Kc4Result {
        corrected_frames: out
            .kept
            .iter()
            .filter(|(_, _, corrected)| *corrected)
            .map(|(_, r, _)| r.source_frame_id)
            .collect(),
        kept: out.kept.into_iter().map(|(_, r, _)| r).collect(),
        rejected: out.rejected.into_iter().map(|(_, r, why)| (r, why)).collect(),
        too_short: out.too_short,
    }
}

enum Stage {
    Reading(GameClockReading),
    Reject(KcStatus, String, bool),
}

fn stage_record(record: &ClockRecord, profile: &LeagueProfile) -> Stage {
    let assessment = kc1_check(record, profile);
    if !assessment.passed {
        let reason = assessment.failure_reason().expect("failed assessment has a reason");
        return Stage::Reject(KcStatus::RejectKc1, reason, true);
    }
    let times: Vec<ClassifiedText> = assessment
        .classified
        .iter()
        .filter(|c| matches!(c.label, ClassLabel::Time { .. }))
        .cloned()
        .collect();
    let selected = match kc3_select_time(&times, profile) {
        Ok(s) => s.clone(),
        Err(e) => return Stage::Reject(KcStatus::RejectKc4, e.to_string(), false),
    };
    let quarter = if profile.continuous_time {
        None
    } else {
        match kc2_resolve_quarter(&assessment.classified, &selected) {
            Ok(q) => Some(q.clone()),
            Err(e) => return Stage::Reject(KcStatus::RejectKc4, e.to_string(), false),
        }
    };

    let mut team_texts: Vec<&ClassifiedText> = assessment
        .classified
        .iter()
        .filter(|c| matches!(c.label, ClassLabel::Team { .. }))
        .collect();
    team_texts.sort_by(|a, b| {
        a.detection
            .bbox
            .x_min
            .total_cmp(&b.detection.bbox.x_min)
            .then(a.detection.bbox.y_min.total_cmp(&b.detection.bbox.y_min))
    });
    let mut seen = BTreeSet::new();
    let mut teams = Vec::new();
    for t in &team_texts {
        if let ClassLabel::Team { abbrev } = &t.label {
            if seen.insert(abbrev.clone()) {
                teams.push((abbrev.clone(), t.detection.bbox));
            }
        }
    }

    let time_form = match &selected.label {
        ClassLabel::Time { form } => form.clone(),
        _ => unreachable!("kc3 returns time candidates only"),
    };
    let mut source_boxes = BTreeMap::new();
    source_boxes.insert(SemanticClass::Time, selected.detection.bbox);
    source_boxes.insert(SemanticClass::Team, teams[0].1);
    let period = match &quarter {
        Some(q) => {
            source_boxes.insert(SemanticClass::Quarter, q.detection.bbox);
            match q.label {
                ClassLabel::Quarter { index } => Period::Quarter(index),
                _ => unreachable!("quarter resolution returns quarter candidates only"),
            }
        }
        None => Period::Marker(String::new()),
    };
    Stage::Reading(GameClockReading {
        teams: (teams[0].0.clone(), teams[1].0.clone()),
        quarter: period,
        time_s: time_to_seconds(&time_form),
        source_frame_id: record.frame_id,
        source_boxes,
    })
}

/// Per-video distillation output, merged corpus-wide by
/// [`merge_video_outputs`].
#[derive(Clone, Debug, PartialEq)]
pub struct VideoDistill {
    pub video_id: String,
    /// One outcome per input record, in frame order.
    pub outcomes: Vec<KcOutcome>,
    pub counts: VideoCounts,
    pub hard_negative_ids: Vec<String>,
}

/// Runs the full constraint pipeline over one video's records: existence
/// and selection per record, then the temporal filter over runs of
/// constant teams and quarter.
pub fn distill_video(
    video_id: &str,
    records: &[ClockRecord],
    profile: &LeagueProfile,
    mode: Kc4Mode,
) -> VideoDistill {
    let mut ordered: Vec<&ClockRecord> = records.iter().collect();
    ordered.sort_by_key(|r| r.frame_id);

    let mut counts = VideoCounts { noisy_total: ordered.len() as u64, ..VideoCounts::default() };
    let mut hard_negative_ids = Vec::new();
    let mut dispositions: Vec<Option<KcOutcome>> = vec![None; ordered.len()];
    let mut readings: Vec<(usize, GameClockReading)> = Vec::new();
    for (i, record) in ordered.iter().enumerate() {
        match stage_record(record, profile) {
            Stage::Reading(reading) => readings.push((i, reading)),
            Stage::Reject(status, reason, hard_negative) => {
                match status {
                    KcStatus::RejectKc1 => counts.rejected_kc1 += 1,
                    _ => counts.rejected_kc4 += 1,
                }
                if hard_negative {
                    hard_negative_ids.push(record_id(record));
                }
                dispositions[i] = Some(KcOutcome {
                    record: (*record).clone(),
                    status,
                    reading: None,
                    reject_reason: Some(reason),
                });
            }
        }
    }

    for run in readings.chunk_by(|(_, a), (_, b)| a.teams == b.teams && a.quarter == b.quarter) {
        let out = filter_run_indexed(run, profile.monotonic_direction, mode);
        if out.too_short {
            counts.short_runs += 1;
        }
        for (i, reading, corrected) in out.kept {
            counts.clean += 1;
            let status = if corrected {
                counts.corrected += 1;
                KcStatus::CorrectedKc4
            } else {
                KcStatus::CleanLabel
            };
            dispositions[i] = Some(KcOutcome {
                record: ordered[i].clone(),
                status,
                reading: Some(reading),
                reject_reason: None,
            });
        }
        for (i, reading, reason) in out.rejected {
            counts.rejected_kc4 += 1;
            let _ = reading;
            dispositions[i] = Some(KcOutcome {
                record: ordered[i].clone(),
                status: KcStatus::RejectKc4,
                reading: None,
                reject_reason: Some(reason),
            });
        }
    }

    VideoDistill {
        video_id: video_id.to_string(),
        outcomes: dispositions
            .into_iter()
            .map(|d| d.expect("every record receives a disposition"))
            .collect(),
        counts,
        hard_negative_ids,
    }
}

/// Combines per-video outputs into corpus order and a single report.
pub fn merge_video_outputs(mut parts: Vec<VideoDistill>) -> (Vec<KcOutcome>, DistillReport) {
    parts.sort_by(|a, b| a.video_id.cmp(&b.video_id));
    let mut outcomes = Vec::new();
    let mut report = DistillReport::default();
    for part in parts {
        report.totals.absorb(&part.counts);
        report.per_video.insert(part.video_id.clone(), part.counts);
        report.hard_negative_ids.extend(part.hard_negative_ids);
        outcomes.extend(part.outcomes);
    }
    (outcomes, report)
}

/// Distills a corpus: groups records by video, runs the constraint
/// pipeline per video, and merges the results in video-id order. The
/// outcome counts always partition the input.
pub fn distill(
    records: &[ClockRecord],
    profile: &LeagueProfile,
    mode: Kc4Mode,
) -> (Vec<KcOutcome>, DistillReport) {
    let mut by_video: BTreeMap<String, Vec<ClockRecord>> = BTreeMap::new();
    for record in records {
        by_video.entry(record.video_id.clone()).or_default().push(record.clone());
    }
    let videos: Vec<(String, Vec<ClockRecord>)> = by_video.into_iter().collect();

    #[cfg(feature = "parallel")]
    let parts: Vec<VideoDistill> = videos
        .par_iter()
        .map(|(id, recs)| distill_video(id, recs, profile, mode))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<VideoDistill> = videos
        .iter()
        .map(|(id, recs)| distill_video(id, recs, profile, mode))
        .collect();

    merge_video_outputs(parts)
}
