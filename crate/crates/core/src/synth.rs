//! Seeded synthetic game streams with known-good labels and controlled
//! corruption.
//!
//! [`generate_game`] emits a clock-record stream whose clean readings
//! and play-by-play feed are known exactly, so constraint filtering and
//! alignment can be tested against ground truth instead of eyeballs.
//! [`corrupt`] then damages those records the way weak recognizers do
//! (misread characters, shifted boxes, missing texts, impossible clock
//! jumps) while logging every mutation, so a test can check precisely
//! which corruptions downstream filters catch.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::align::PlayEvent;
use crate::model::{
    BBox, ClockRecord, GameClockReading, LeagueProfile, Period, SemanticClass, TextDetection,
};
use crate::surface_form::{parse_time, time_to_seconds, TimeForm};

/// Noise configuration; rates are independent per-opportunity
/// probabilities in `[0, 1]`, jitter is a pixel magnitude.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub char_substitution_rate: f64,
    pub box_jitter_px: f64,
    pub drop_detection_rate: f64,
    pub time_spike_rate: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn zero(seed: u64) -> NoiseSpec {
        NoiseSpec {
            char_substitution_rate: 0.0,
            box_jitter_px: 0.0,
            drop_detection_rate: 0.0,
            time_spike_rate: 0.0,
            seed,
        }
    }

    pub fn validity_error(&self) -> Option<String> {
        for (name, rate) in [
            ("char_substitution_rate", self.char_substitution_rate),
            ("drop_detection_rate", self.drop_detection_rate),
            ("time_spike_rate", self.time_spike_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) || !rate.is_finite() {
                return Some(format!("{name} must be in [0, 1], got {rate}"));
            }
        }
        if !self.box_jitter_px.is_finite() || self.box_jitter_px < 0.0 {
            return Some(format!(
                "box_jitter_px must be non-negative, got {}",
                self.box_jitter_px
            ));
        }
        None
    }
}

/// One logged mutation; `record_index` addresses the input slice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorruptionEvent {
    CharSubstitution {
        record_index: usize,
        detection_index: usize,
        original: String,
        corrupted: String,
    },
    BoxJitter {
        record_index: usize,
        detection_index: usize,
        dx: f64,
        dy: f64,
    },
    DropDetection {
        record_index: usize,
        detection_index: usize,
        text: String,
    },
    TimeSpike {
        record_index: usize,
        detection_index: usize,
        original: String,
        corrupted: String,
    },
}

impl CorruptionEvent {
    pub fn record_index(&self) -> usize {
        match self {
            CorruptionEvent::CharSubstitution { record_index, .. }
            | CorruptionEvent::BoxJitter { record_index, .. }
            | CorruptionEvent::DropDetection { record_index, .. }
            | CorruptionEvent::TimeSpike { record_index, .. } => *record_index,
        }
    }
}

/// A generated stream with its ground truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratedGame {
    pub video_id: String,
    pub records: Vec<ClockRecord>,
    /// Exactly what distillation should produce from `records`.
    pub readings: Vec<GameClockReading>,
    /// One event per distinct alignment key in `readings`.
    pub feed: Vec<PlayEvent>,
}

const QUARTER_SECONDS: u32 = 720;

fn detection(text: &str, bbox: BBox) -> TextDetection {
    TextDetection { bbox, raw_text: text.to_string(), confidence: 1.0 }
}

fn team_box(slot: usize) -> BBox {
    let y = 10.0 + slot as f64 * 45.0;
    BBox::new(10.0, y, 60.0, y + 25.0)
}

fn quarter_box() -> BBox {
    BBox::new(200.0, 10.0, 250.0, 35.0)
}

fn time_box() -> BBox {
    BBox::new(200.0, 55.0, 300.0, 85.0)
}

fn render_min_sec(total_seconds: u32) -> (String, f64) {
    let form = TimeForm::MinSec {
        minutes: total_seconds / 60,
        seconds: total_seconds % 60,
    };
    let text = form.render();
    // The reading's value goes through the same parse the distiller uses,
    // so generated and distilled readings agree bit for bit.
    let parsed = parse_time(&text).expect("rendered times always parse");
    (text, time_to_seconds(&parsed))
}

/// Generates one video's clock stream: the clock moves exactly one
/// second per frame in the profile direction. Leagues with quarters tick
/// each quarter from 12:00 down to 0:01 and start a fresh team matchup
/// once the last listed quarter ends; continuous leagues count up from
/// 0:00 with one fixed matchup. The feed carries exactly one event per
/// distinct alignment key, so every clean run aligns unambiguously.
pub fn generate_game(
    profile: &LeagueProfile,
    n_frames: usize,
    fps: u32,
    seed: u64,
) -> GeneratedGame {
    let fps = fps.max(1);
    let video_id = format!("synth-{}-{}", profile.league_id, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut teams: Vec<String> = profile.team_lexicon.iter().cloned().collect();
    for i in (1..teams.len()).rev() {
        teams.swap(i, rng.gen_range(0..=i));
    }
    let pair_for = |segment: usize| -> (String, String) {
        let a = teams[(2 * segment) % teams.len()].clone();
        let b = teams[(2 * segment + 1) % teams.len()].clone();
        (a, b)
    };

    let n_quarters = profile.quarter_forms.len().max(1);
    let segment_frames = QUARTER_SECONDS as usize * n_quarters;

    let mut records = Vec::with_capacity(n_frames);
    let mut readings = Vec::with_capacity(n_frames);
    let mut feed = Vec::new();
    let mut seen_keys = BTreeMap::new();

    for frame in 0..n_frames {
        let (pair, period, quarter_text, total_seconds) = if profile.continuous_time {
            (pair_for(0), Period::Marker(String::new()), None, frame as u32)
        } else {
            let segment = frame / segment_frames;
            let in_segment = frame % segment_frames;
            let quarter = (in_segment / QUARTER_SECONDS as usize) as u8 + 1;
            let in_quarter = (in_segment % QUARTER_SECONDS as usize) as u32;
            (
                pair_for(segment),
                Period::Quarter(quarter),
                Some(profile.quarter_forms[quarter as usize - 1].clone()),
                QUARTER_SECONDS - in_quarter,
            )
        };
        let (time_text, time_s) = render_min_sec(total_seconds);

        let mut detections = vec![
            detection(&pair.0, team_box(0)),
            detection(&pair.1, team_box(1)),
        ];
        if let Some(q) = &quarter_text {
            detections.push(detection(q, quarter_box()));
        }
        detections.push(detection(&time_text, time_box()));

        records.push(ClockRecord {
            video_id: video_id.clone(),
            frame_id: frame as i64,
            frame_time_s: frame as f64 / f64::from(fps),
            clock_box: BBox::new(0.0, 0.0, 400.0, 100.0),
            detections,
        });

        let mut source_boxes = BTreeMap::new();
        source_boxes.insert(SemanticClass::Team, team_box(0));
        source_boxes.insert(SemanticClass::Time, time_box());
        if quarter_text.is_some() {
            source_boxes.insert(SemanticClass::Quarter, quarter_box());
        }
        readings.push(GameClockReading {
            teams: pair.clone(),
            quarter: period.clone(),
            time_s,
            source_frame_id: frame as i64,
            source_boxes,
        });

        let feed_key = match &period {
            Period::Quarter(q) => (pair.clone(), Some(*q), time_s.floor() as i64),
            Period::Marker(_) => (pair.clone(), None, (time_s / 60.0).floor() as i64),
        };
        if seen_keys.insert(feed_key.clone(), ()).is_none() {
            let (event_quarter, event_time) = match &period {
                Period::Quarter(q) => (Period::Quarter(*q), time_s.floor()),
                Period::Marker(_) => {
                    let minute = (time_s / 60.0).floor();
                    (Period::Marker(format!("{minute}'")), minute * 60.0)
                }
            };
            feed.push(PlayEvent {
                game_id: video_id.clone(),
                quarter: event_quarter,
                time_s: event_time,
                teams: pair,
                action: format!("action-{}", feed.len()),
                players: vec![format!("player-{}", feed.len() % 10)],
                description: format!("synthetic event {}", feed.len()),
            });
        }
    }

    GeneratedGame { video_id, records, readings, feed }
}

fn confuse(c: char) -> char {
    match c {
        '0' => 'o',
        '1' => 'l',
        '2' => 'z',
        '3' => 'e',
        '4' => 'a',
        '5' => 's',
        '6' => 'b',
        '7' => 't',
        '8' => 'b',
        '9' => 'q',
        ':' => ';',
        '.' => ',',
        _ => '#',
    }
}

fn substitute_char(text: &str, at: usize) -> String {
    text.chars()
        .enumerate()
        .map(|(i, c)| if i == at { confuse(c) } else { c })
        .collect()
}

fn parseable_time_index(record: &ClockRecord) -> Option<(usize, f64)> {
    record
        .detections
        .iter()
        .enumerate()
        .find_map(|(i, d)| parse_time(&d.raw_text).map(|f| (i, time_to_seconds(&f))))
}

/// How far apart two adjacent clock readings may sit and still count as
/// one smooth stretch; larger gaps mean a run boundary.
const SMOOTH_STEP_S: f64 = 30.0;

/// Applies each noise mode at its configured rate and logs every
/// mutation. Modes run in fixed passes over the whole input: character
/// substitutions, then box jitter, then detection drops, then time
/// spikes; identical `(records, spec)` always produce identical output.
///
/// Substituted characters come from a confusion map that never yields
/// another valid team, quarter, or time string, so a substitution is
/// always visible to the existence check. Spikes add an hour to the
/// clock and fire only at frames whose neighbors are intact and within
/// one smooth stretch, which keeps every spike inside a filterable run
/// rather than hiding it on a boundary.
pub fn corrupt(
    records: &[ClockRecord],
    spec: &NoiseSpec,
) -> (Vec<ClockRecord>, Vec<CorruptionEvent>) {
    let mut out: Vec<ClockRecord> = records.to_vec();
    let mut log: Vec<CorruptionEvent> = Vec::new();
    let mut touched = vec![false; out.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    if spec.char_substitution_rate > 0.0 {
        for (ri, record) in out.iter_mut().enumerate() {
            for (di, det) in record.detections.iter_mut().enumerate() {
                if det.raw_text.is_empty() || rng.gen::<f64>() >= spec.char_substitution_rate {
                    continue;
                }
                let at = rng.gen_range(0..det.raw_text.chars().count());
                let corrupted = substitute_char(&det.raw_text, at);
                log.push(CorruptionEvent::CharSubstitution {
                    record_index: ri,
                    detection_index: di,
                    original: det.raw_text.clone(),
                    corrupted: corrupted.clone(),
                });
                det.raw_text = corrupted;
                touched[ri] = true;
            }
        }
    }

    if spec.box_jitter_px > 0.0 {
        for (ri, record) in out.iter_mut().enumerate() {
            for (di, det) in record.detections.iter_mut().enumerate() {
                let dx = rng.gen_range(-spec.box_jitter_px..=spec.box_jitter_px);
                let dy = rng.gen_range(-spec.box_jitter_px..=spec.box_jitter_px);
                det.bbox = BBox::new(
                    det.bbox.x_min + dx,
                    det.bbox.y_min + dy,
                    det.bbox.x_max + dx,
                    det.bbox.y_max + dy,
                );
                log.push(CorruptionEvent::BoxJitter {
                    record_index: ri,
                    detection_index: di,
                    dx,
                    dy,
                });
            }
        }
    }

    if spec.drop_detection_rate > 0.0 {
        for (ri, record) in out.iter_mut().enumerate() {
            let mut drop: Vec<usize> = Vec::new();
            for di in 0..record.detections.len() {
                if rng.gen::<f64>() < spec.drop_detection_rate {
                    drop.push(di);
                }
            }
            for di in drop.into_iter().rev() {
                let removed = record.detections.remove(di);
                log.push(CorruptionEvent::DropDetection {
                    record_index: ri,
                    detection_index: di,
                    text: removed.raw_text,
                });
                touched[ri] = true;
            }
        }
    }

    if spec.time_spike_rate > 0.0 {
        let mut by_video: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, record) in out.iter().enumerate() {
            by_video.entry(record.video_id.clone()).or_default().push(i);
        }
        for indices in by_video.values() {
            let mut times: Vec<Option<f64>> = indices
                .iter()
                .map(|i| parseable_time_index(&out[*i]).map(|(_, t)| t))
                .collect();
            for k in 0..indices.len() {
                if rng.gen::<f64>() >= spec.time_spike_rate {
                    continue;
                }
                if k == 0 || k + 1 == indices.len() {
                    continue;
                }
                let (prev_i, next_i) = (indices[k - 1], indices[k + 1]);
                if touched[prev_i] || touched[next_i] {
                    continue;
                }
                let (t, prev_t, next_t) = match (times[k], times[k - 1], times[k + 1]) {
                    (Some(t), Some(p), Some(n)) => (t, p, n),
                    _ => continue,
                };
                if (t - prev_t).abs() > SMOOTH_STEP_S || (t - next_t).abs() > SMOOTH_STEP_S {
                    continue;
                }
                let i = indices[k];
                let (di, _) = parseable_time_index(&out[i]).expect("time parsed above");
                let spiked_seconds = (t + 3600.0) as u32;
                let (corrupted, new_t) = render_min_sec(spiked_seconds);
                let original = out[i].detections[di].raw_text.clone();
                out[i].detections[di].raw_text = corrupted.clone();
                times[k] = Some(new_t);
                touched[i] = true;
                log.push(CorruptionEvent::TimeSpike {
                    record_index: i,
                    detection_index: di,
                    original,
                    corrupted,
                });
            }
        }
    }

    (out, log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kc::{distill, kc1_check, Kc4Mode, KcStatus};
    use proptest::prelude::*;

    #[test]
    fn nba_times_strictly_decrease_within_quarters() {
        let nba = LeagueProfile::nba();
        let game = generate_game(&nba, 30, 2, 7);
        assert_eq!(game.records.len(), 30);
        for pair in game.readings.windows(2) {
            if pair[0].quarter == pair[1].quarter {
                assert!(pair[1].time_s < pair[0].time_s);
            }
        }
    }

    #[test]
    fn quarters_advance_and_reset_the_clock() {
        let nba = LeagueProfile::nba();
        let game = generate_game(&nba, 725, 1, 7);
        assert_eq!(game.readings[0].quarter, Period::Quarter(1));
        assert_eq!(game.readings[0].time_s, 720.0);
        assert_eq!(game.readings[719].time_s, 1.0);
        assert_eq!(game.readings[720].quarter, Period::Quarter(2));
        assert_eq!(game.readings[720].time_s, 720.0);
    }

    #[test]
    fn soccer_times_strictly_increase() {
        let soccer = LeagueProfile::soccer();
        let game = generate_game(&soccer, 40, 2, 9);
        for pair in game.readings.windows(2) {
            assert!(pair[1].time_s > pair[0].time_s);
        }
        assert!(game.records[0].detections.len() == 3);
    }

    #[test]
    fn same_seed_reproduces_streams() {
        let nba = LeagueProfile::nba();
        let a = generate_game(&nba, 100, 2, 42);
        let b = generate_game(&nba, 100, 2, 42);
        assert_eq!(a, b);
        let c = generate_game(&nba, 100, 2, 43);
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn feed_has_one_event_per_distinct_key() {
        let nba = LeagueProfile::nba();
        let game = generate_game(&nba, 300, 1, 5);
        assert_eq!(game.feed.len(), 300);
        let soccer = LeagueProfile::soccer();
        let game = generate_game(&soccer, 300, 1, 5);
        assert_eq!(game.feed.len(), 5);
    }

    #[test]
    fn zero_noise_is_identity_with_empty_log() {
        let nba = LeagueProfile::nba();
        let game = generate_game(&nba, 50, 2, 3);
        let (noisy, log) = corrupt(&game.records, &NoiseSpec::zero(99));
        assert_eq!(noisy, game.records);
        assert!(log.is_empty());
    }

    #[test]
    fn zero_noise_round_trip_reproduces_readings() {
        let nba = LeagueProfile::nba();
        let game = generate_game(&nba, 200, 2, 11);
        let (noisy, _) = corrupt(&game.records, &NoiseSpec::zero(0));
        let (outcomes, report) = distill(&noisy, &nba, Kc4Mode::Discard);
        assert_eq!(report.totals.clean, 200);
        assert!(outcomes.iter().all(|o| o.status == KcStatus::CleanLabel));
        let distilled: Vec<GameClockReading> =
            outcomes.into_iter().map(|o| o.reading.unwrap()).collect();
        assert_eq!(distilled, game.readings);
    }

    #[test]
    fn dropping_everything_fails_every_existence_check() {
        let nba = LeagueProfile::nba();
        let game = generate_game(&nba, 20, 2, 3);
        let spec = NoiseSpec {
            drop_detection_rate: 1.0,
            ..NoiseSpec::zero(5)
        };
        let (noisy, log) = corrupt(&game.records, &spec);
        for record in &noisy {
            assert!(!kc1_check(record, &nba).passed);
        }
        assert_eq!(
            log.iter()
                .filter(|e| matches!(e, CorruptionEvent::DropDetection { .. }))
                .count(),
            20 * 4
        );
    }

    #[test]
    fn jitter_moves_boxes_but_keeps_records_clean() {
        let nba = LeagueProfile::nba();
        let game = generate_game(&nba, 20, 2, 3);
        let spec = NoiseSpec { box_jitter_px: 3.0, ..NoiseSpec::zero(5) };
        let (noisy, log) = corrupt(&game.records, &spec);
        assert!(log.iter().all(|e| matches!(e, CorruptionEvent::BoxJitter { .. })));
        for record in &noisy {
            assert!(kc1_check(record, &nba).passed);
        }
        assert_ne!(noisy, game.records);
    }

    #[test]
    fn spikes_hit_only_smooth_interiors_and_get_flagged() {
        let nba = LeagueProfile::nba();
        let game = generate_game(&nba, 400, 2, 17);
        let spec = NoiseSpec { time_spike_rate: 0.1, ..NoiseSpec::zero(23) };
        let (noisy, log) = corrupt(&game.records, &spec);
        let spiked: Vec<usize> = log.iter().map(|e| e.record_index()).collect();
        assert!(!spiked.is_empty());
        let (outcomes, _) = distill(&noisy, &nba, Kc4Mode::Correct);
        for index in spiked {
            let status = outcomes[index].status;
            assert!(
                status == KcStatus::CorrectedKc4 || status == KcStatus::RejectKc4,
                "spiked frame {index} ended up {status:?}"
            );
        }
    }

    #[test]
    fn corrupt_is_seed_deterministic() {
        let nba = LeagueProfile::nba();
        let game = generate_game(&nba, 60, 2, 1);
        let spec = NoiseSpec {
            char_substitution_rate: 0.2,
            box_jitter_px: 2.0,
            drop_detection_rate: 0.1,
            time_spike_rate: 0.1,
            seed: 77,
        };
        assert_eq!(corrupt(&game.records, &spec), corrupt(&game.records, &spec));
    }

    #[test]
    fn noise_spec_validation_catches_bad_rates() {
        let mut spec = NoiseSpec::zero(0);
        assert!(spec.validity_error().is_none());
        spec.char_substitution_rate = 1.5;
        assert!(spec.validity_error().is_some());
        let mut spec = NoiseSpec::zero(0);
        spec.box_jitter_px = -1.0;
        assert!(spec.validity_error().is_some());
    }

    proptest! {
        #[test]
        fn substitutions_never_produce_valid_strings(
            seed in 0u64..500,
        ) {
            let nba = LeagueProfile::nba();
            let game = generate_game(&nba, 40, 2, seed);
            let spec = NoiseSpec { char_substitution_rate: 0.5, ..NoiseSpec::zero(seed) };
            let (_, log) = corrupt(&game.records, &spec);
            for event in log {
                if let CorruptionEvent::CharSubstitution { corrupted, .. } = event {
                    let det = TextDetection {
                        bbox: BBox::new(0.0, 0.0, 10.0, 10.0),
                        raw_text: corrupted.clone(),
                        confidence: 1.0,
                    };
                    let label = crate::surface_form::classify(&det, &nba).label;
                    prop_assert!(
                        matches!(label, crate::surface_form::ClassLabel::Other),
                        "{corrupted:?} still classifies as {label:?}"
                    );
                }
            }
        }

        #[test]
        fn every_diff_is_explained_by_the_log(
            seed in 0u64..200,
        ) {
            let nba = LeagueProfile::nba();
            let game = generate_game(&nba, 30, 2, seed);
            let spec = NoiseSpec {
                char_substitution_rate: 0.2,
                box_jitter_px: 0.0,
                drop_detection_rate: 0.1,
                time_spike_rate: 0.1,
                seed,
            };
            let (noisy, log) = corrupt(&game.records, &spec);
            let logged: std::collections::BTreeSet<usize> =
                log.iter().map(|e| e.record_index()).collect();
            for (i, (clean, dirty)) in game.records.iter().zip(&noisy).enumerate() {
                if clean != dirty {
                    prop_assert!(logged.contains(&i), "unlogged diff at record {i}");
                }
            }
        }
    }
}
