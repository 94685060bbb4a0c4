//! Aligning distilled clock readings to play-by-play feeds.
//!
//! A cleaned reading carries (teams, quarter, time); a play-by-play
//! event carries the same triple. Consecutive frames showing one clock
//! second collapse into a run, and each run either matches exactly one
//! feed event (aligned), none (unmatched), or several (ambiguous, left
//! unattached: a guessed link is worse than no link). Leagues with a
//! continuous clock have no quarter, so their key degrades to
//! (teams, minute).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{GameClockReading, Period};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Frame-id gap above which a run breaks even when the key matches.
pub const DEFAULT_MAX_FRAME_GAP: i64 = 3;

/// One play-by-play entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlayEvent {
    pub game_id: String,
    pub quarter: Period,
    pub time_s: f64,
    pub teams: (String, String),
    pub action: String,
    #[serde(default)]
    pub players: Vec<String>,
    #[serde(default)]
    pub description: String,
}

impl PlayEvent {
    pub fn validity_error(&self) -> Option<String> {
        if !self.time_s.is_finite() || self.time_s < 0.0 {
            return Some(format!("time_s must be non-negative, got {}", self.time_s));
        }
        if self.teams.0 == self.teams.1 {
            return Some(format!("teams must be distinct, got {:?}", self.teams));
        }
        None
    }
}

/// A run of consecutive frames sharing one clock key, with its matching
/// feed event when exactly one exists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignedSegment {
    pub video_id: String,
    pub frame_start: i64,
    pub frame_end: i64,
    pub reading: GameClockReading,
    pub event: Option<PlayEvent>,
    /// Number of feed events sharing the run's key: 0 unmatched,
    /// 1 aligned, 2+ ambiguous (no event attached).
    pub ambiguity: usize,
}

/// Composite matching key. Team order never matters; the pair is sorted.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum AlignKey {
    Periodic { teams: (String, String), quarter: u8, second: i64 },
    Continuous { teams: (String, String), minute: i64 },
}

fn sorted_teams(teams: &(String, String)) -> (String, String) {
    if teams.0 <= teams.1 {
        teams.clone()
    } else {
        (teams.1.clone(), teams.0.clone())
    }
}

fn reading_key(reading: &GameClockReading) -> AlignKey {
    let teams = sorted_teams(&reading.teams);
    match &reading.quarter {
        Period::Quarter(q) => AlignKey::Periodic {
            teams,
            quarter: *q,
            second: reading.time_s.floor() as i64,
        },
        Period::Marker(_) => AlignKey::Continuous {
            teams,
            minute: (reading.time_s / 60.0).floor() as i64,
        },
    }
}

fn event_key(event: &PlayEvent) -> AlignKey {
    let teams = sorted_teams(&event.teams);
    match &event.quarter {
        Period::Quarter(q) => AlignKey::Periodic {
            teams,
            quarter: *q,
            second: event.time_s.floor() as i64,
        },
        Period::Marker(_) => AlignKey::Continuous {
            teams,
            minute: (event.time_s / 60.0).floor() as i64,
        },
    }
}

/// Immutable feed lookup shared across videos.
#[derive(Clone, Debug)]
pub struct FeedIndex {
    events: Vec<PlayEvent>,
    by_key: BTreeMap<AlignKey, Vec<usize>>,
}

impl FeedIndex {
    pub fn new(feed: &[PlayEvent]) -> FeedIndex {
        let mut by_key: BTreeMap<AlignKey, Vec<usize>> = BTreeMap::new();
        for (i, event) in feed.iter().enumerate() {
            by_key.entry(event_key(event)).or_default().push(i);
        }
        FeedIndex { events: feed.to_vec(), by_key }
    }

    fn candidates(&self, key: &AlignKey) -> &[usize] {
        self.by_key.get(key).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Splits frame-ordered readings of one video into maximal runs sharing
/// an identical (teams, quarter, whole-second) key, breaking on any key
/// change or on a frame gap larger than `max_gap`.
pub fn segment_readings(
    readings: &[GameClockReading],
    max_gap: i64,
) -> Vec<Vec<GameClockReading>> {
    let mut runs: Vec<Vec<GameClockReading>> = Vec::new();
    for reading in readings {
        let start_new = match runs.last().and_then(|run| run.last()) {
            None => true,
            Some(prev) => {
                reading_key(prev) != reading_key(reading)
                    || reading.source_frame_id - prev.source_frame_id > max_gap
            }
        };
        if start_new {
            runs.push(Vec::new());
        }
        runs.last_mut().expect("a run was just pushed").push(reading.clone());
    }
    runs
}

/// Matches each run against the feed by composite key.
pub fn align_segments(
    video_id: &str,
    runs: &[Vec<GameClockReading>],
    index: &FeedIndex,
) -> Vec<AlignedSegment> {
    runs.iter()
        .filter(|run| !run.is_empty())
        .map(|run| {
            let first = &run[0];
            let last = run.last().expect("run is non-empty");
            let candidates = index.candidates(&reading_key(first));
            AlignedSegment {
                video_id: video_id.to_string(),
                frame_start: first.source_frame_id,
                frame_end: last.source_frame_id,
                reading: first.clone(),
                event: match candidates {
                    [only] => Some(index.events[*only].clone()),
                    _ => None,
                },
                ambiguity: candidates.len(),
            }
        })
        .collect()
}

/// Segments and aligns every video against one shared feed index,
/// returning segments in video-id order.
pub fn align_corpus(
    readings_by_video: &BTreeMap<String, Vec<GameClockReading>>,
    feed: &[PlayEvent],
    max_gap: i64,
) -> Vec<AlignedSegment> {
    let index = FeedIndex::new(feed);
    let videos: Vec<(&String, &Vec<GameClockReading>)> = readings_by_video.iter().collect();

    #[cfg(feature = "parallel")]
    let per_video: Vec<Vec<AlignedSegment>> = videos
        .par_iter()
        .map(|(id, readings)| align_segments(id, &segment_readings(readings, max_gap), &index))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let per_video: Vec<Vec<AlignedSegment>> = videos
        .iter()
        .map(|(id, readings)| align_segments(id, &segment_readings(readings, max_gap), &index))
        .collect();

    per_video.into_iter().flatten().collect()
}

/// Aggregate alignment quality over emitted segments.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AlignmentStats {
    pub total_runs: u64,
    pub aligned: u64,
    pub unmatched: u64,
    pub ambiguous: u64,
    pub aligned_pct: f64,
    pub unmatched_pct: f64,
    pub ambiguous_pct: f64,
    /// Mean inclusive frame span per run.
    pub mean_run_length: f64,
    /// Set when there were no segments at all; every number above is 0.
    pub empty: bool,
}

pub fn alignment_stats(segments: &[AlignedSegment]) -> AlignmentStats {
    if segments.is_empty() {
        return AlignmentStats { empty: true, ..AlignmentStats::default() };
    }
    let total = segments.len() as u64;
    let aligned = segments.iter().filter(|s| s.ambiguity == 1).count() as u64;
    let unmatched = segments.iter().filter(|s| s.ambiguity == 0).count() as u64;
    let ambiguous = total - aligned - unmatched;
    let span_sum: i64 = segments.iter().map(|s| s.frame_end - s.frame_start + 1).sum();
    let pct = |n: u64| n as f64 / total as f64 * 100.0;
    AlignmentStats {
        total_runs: total,
        aligned,
        unmatched,
        ambiguous,
        aligned_pct: pct(aligned),
        unmatched_pct: pct(unmatched),
        ambiguous_pct: pct(ambiguous),
        mean_run_length: span_sum as f64 / total as f64,
        empty: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeMap as Map;

    fn reading(frame: i64, time_s: f64) -> GameClockReading {
        reading_for(frame, time_s, ("phx", "gs"), Period::Quarter(2))
    }

    fn reading_for(
        frame: i64,
        time_s: f64,
        teams: (&str, &str),
        quarter: Period,
    ) -> GameClockReading {
        GameClockReading {
            teams: (teams.0.to_string(), teams.1.to_string()),
            quarter,
            time_s,
            source_frame_id: frame,
            source_boxes: Map::new(),
        }
    }

    fn event(quarter: Period, time_s: f64, teams: (&str, &str)) -> PlayEvent {
        PlayEvent {
            game_id: "g1".to_string(),
            quarter,
            time_s,
            teams: (teams.0.to_string(), teams.1.to_string()),
            action: "shot".to_string(),
            players: vec![],
            description: String::new(),
        }
    }

    #[test]
    fn identical_key_frames_form_one_run() {
        let readings: Vec<_> = (0..5).map(|f| reading(f, 17.3)).collect();
        let runs = segment_readings(&readings, DEFAULT_MAX_FRAME_GAP);
        assert_eq!(runs.len(), 1);
        assert_eq!(runs[0].len(), 5);
    }

    #[test]
    fn key_change_splits_runs_and_partitions() {
        let mut readings: Vec<_> = (0..3).map(|f| reading(f, 17.3)).collect();
        readings.extend((3..6).map(|f| reading(f, 16.9)));
        let runs = segment_readings(&readings, DEFAULT_MAX_FRAME_GAP);
        assert_eq!(runs.len(), 2);
        assert_eq!(runs.iter().map(Vec::len).sum::<usize>(), readings.len());
    }

    #[test]
    fn team_change_between_adjacent_frames_breaks_run() {
        let readings = vec![
            reading_for(0, 17.3, ("phx", "gs"), Period::Quarter(2)),
            reading_for(1, 17.3, ("lal", "bos"), Period::Quarter(2)),
        ];
        assert_eq!(segment_readings(&readings, DEFAULT_MAX_FRAME_GAP).len(), 2);
    }

    #[test]
    fn frame_gap_breaks_run_only_above_max() {
        let within = vec![reading(0, 17.3), reading(3, 17.3)];
        assert_eq!(segment_readings(&within, 3).len(), 1);
        let beyond = vec![reading(0, 17.3), reading(4, 17.3)];
        assert_eq!(segment_readings(&beyond, 3).len(), 2);
    }

    #[test]
    fn subsecond_readings_share_whole_second_key() {
        let readings = vec![reading(0, 17.0), reading(1, 17.3), reading(2, 17.9)];
        assert_eq!(segment_readings(&readings, 3).len(), 1);
        let crossing = vec![reading(0, 17.9), reading(1, 18.0)];
        assert_eq!(segment_readings(&crossing, 3).len(), 2);
    }

    #[test]
    fn unique_key_match_attaches_event() {
        let runs = vec![vec![reading(0, 17.3), reading(1, 17.3)]];
        let feed = vec![
            event(Period::Quarter(2), 17.0, ("phx", "gs")),
            event(Period::Quarter(2), 55.0, ("phx", "gs")),
        ];
        let segments = align_segments("v", &runs, &FeedIndex::new(&feed));
        assert_eq!(segments.len(), 1);
        assert_eq!(segments[0].ambiguity, 1);
        assert_eq!(segments[0].event.as_ref().unwrap().time_s, 17.0);
        assert_eq!(segments[0].frame_start, 0);
        assert_eq!(segments[0].frame_end, 1);
    }

    #[test]
    fn team_order_never_affects_matching() {
        let feed = vec![event(Period::Quarter(2), 17.0, ("gs", "phx"))];
        let index = FeedIndex::new(&feed);
        for teams in [("phx", "gs"), ("gs", "phx")] {
            let runs = vec![vec![reading_for(0, 17.3, teams, Period::Quarter(2))]];
            let segments = align_segments("v", &runs, &index);
            assert_eq!(segments[0].ambiguity, 1, "teams {teams:?}");
        }
    }

    #[test]
    fn no_candidate_leaves_run_unmatched() {
        let runs = vec![vec![reading(0, 17.3)]];
        let feed = vec![event(Period::Quarter(1), 17.0, ("phx", "gs"))];
        let segments = align_segments("v", &runs, &FeedIndex::new(&feed));
        assert_eq!(segments[0].ambiguity, 0);
        assert!(segments[0].event.is_none());
    }

    #[test]
    fn duplicate_key_events_attach_nothing() {
        let runs = vec![vec![reading(0, 17.3)]];
        let feed = vec![
            event(Period::Quarter(2), 17.0, ("phx", "gs")),
            event(Period::Quarter(2), 17.4, ("gs", "phx")),
        ];
        let segments = align_segments("v", &runs, &FeedIndex::new(&feed));
        assert_eq!(segments[0].ambiguity, 2);
        assert!(segments[0].event.is_none());
    }

    #[test]
    fn floor_rule_matches_down_never_up() {
        let index = FeedIndex::new(&[
            event(Period::Quarter(2), 17.0, ("phx", "gs")),
            event(Period::Quarter(2), 18.0, ("phx", "gs")),
        ]);
        let runs = vec![vec![reading(0, 17.3)]];
        let segments = align_segments("v", &runs, &index);
        assert_eq!(segments[0].event.as_ref().unwrap().time_s, 17.0);
    }

    #[test]
    fn continuous_league_keys_on_minute() {
        let soccer_reading =
            reading_for(0, 1401.0, ("mci", "liv"), Period::Marker(String::new()));
        let feed = vec![
            event(Period::Marker("23'".to_string()), 1380.0, ("liv", "mci")),
            event(Period::Marker("24'".to_string()), 1440.0, ("liv", "mci")),
        ];
        let segments =
            align_segments("v", &[vec![soccer_reading]], &FeedIndex::new(&feed));
        assert_eq!(segments[0].ambiguity, 1);
        assert_eq!(segments[0].event.as_ref().unwrap().time_s, 1380.0);
    }

    #[test]
    fn stats_all_aligned() {
        let runs = vec![vec![reading(0, 17.3)], vec![reading(5, 16.2)]];
        let feed = vec![
            event(Period::Quarter(2), 17.0, ("phx", "gs")),
            event(Period::Quarter(2), 16.0, ("phx", "gs")),
        ];
        let segments = align_segments("v", &runs, &FeedIndex::new(&feed));
        let stats = alignment_stats(&segments);
        assert_eq!(stats.aligned_pct, 100.0);
        assert_eq!(stats.unmatched_pct, 0.0);
        assert_eq!(stats.ambiguous_pct, 0.0);
        assert!(!stats.empty);
    }

    #[test]
    fn stats_empty_input_flags_empty() {
        let stats = alignment_stats(&[]);
        assert!(stats.empty);
        assert_eq!(stats.total_runs, 0);
        assert_eq!(stats.aligned_pct, 0.0);
    }

    #[test]
    fn stats_seventy_thirty_split() {
        let mut runs: Vec<Vec<GameClockReading>> = Vec::new();
        for i in 0..10 {
            runs.push(vec![reading(i * 10, 100.0 - i as f64)]);
        }
        let feed: Vec<PlayEvent> = (0..7)
            .map(|i| event(Period::Quarter(2), 100.0 - i as f64, ("phx", "gs")))
            .collect();
        let stats = alignment_stats(&align_segments("v", &runs, &FeedIndex::new(&feed)));
        assert_eq!(stats.aligned, 7);
        assert_eq!(stats.unmatched, 3);
        assert!((stats.aligned_pct - 70.0).abs() < 1e-12);
        assert!((stats.unmatched_pct - 30.0).abs() < 1e-12);
        assert!(
            (stats.aligned_pct + stats.unmatched_pct + stats.ambiguous_pct - 100.0).abs()
                < 1e-9
        );
    }

    #[test]
    fn align_corpus_walks_videos_in_id_order() {
        let mut by_video = Map::new();
        by_video.insert("b".to_string(), vec![reading(0, 17.3)]);
        by_video.insert("a".to_string(), vec![reading(0, 16.2)]);
        let feed = vec![event(Period::Quarter(2), 17.0, ("phx", "gs"))];
        let segments = align_corpus(&by_video, &feed, DEFAULT_MAX_FRAME_GAP);
        assert_eq!(segments.len(), 2);
        assert_eq!(segments[0].video_id, "a");
        assert_eq!(segments[1].video_id, "b");
        assert_eq!(segments[1].ambiguity, 1);
    }

    proptest! {
        #[test]
        fn segmentation_partitions_readings(
            times in proptest::collection::vec(0.0f64..30.0, 1..50),
            gaps in proptest::collection::vec(1i64..6, 1..50),
        ) {
            let n = times.len().min(gaps.len());
            let mut frame = 0;
            let readings: Vec<GameClockReading> = (0..n)
                .map(|i| {
                    frame += gaps[i];
                    reading(frame, times[i])
                })
                .collect();
            let runs = segment_readings(&readings, DEFAULT_MAX_FRAME_GAP);
            let flattened: Vec<GameClockReading> =
                runs.iter().flatten().cloned().collect();
            prop_assert_eq!(flattened, readings);
        }

        #[test]
        fn align_pass_is_deterministic_and_idempotent(
            seconds in proptest::collection::vec(0i64..40, 1..30),
        ) {
            let readings: Vec<GameClockReading> = seconds
                .iter()
                .enumerate()
                .map(|(i, s)| reading(i as i64 * 5, *s as f64))
                .collect();
            let feed: Vec<PlayEvent> = (0..20)
                .map(|s| event(Period::Quarter(2), s as f64, ("phx", "gs")))
                .collect();
            let index = FeedIndex::new(&feed);
            let runs = segment_readings(&readings, DEFAULT_MAX_FRAME_GAP);
            let first = align_segments("v", &runs, &index);
            let second = align_segments("v", &runs, &index);
            prop_assert_eq!(&first, &second);
            prop_assert_eq!(
                serde_json::to_string(&first).unwrap(),
                serde_json::to_string(&second).unwrap()
            );
        }

        #[test]
        fn swapping_reading_team_order_changes_nothing(
            second in 0i64..40,
        ) {
            let feed: Vec<PlayEvent> = (0..40)
                .map(|s| event(Period::Quarter(2), s as f64, ("gs", "phx")))
                .collect();
            let index = FeedIndex::new(&feed);
            let a = align_segments(
                "v",
                &[vec![reading_for(0, second as f64, ("phx", "gs"), Period::Quarter(2))]],
                &index,
            );
            let b = align_segments(
                "v",
                &[vec![reading_for(0, second as f64, ("gs", "phx"), Period::Quarter(2))]],
                &index,
            );
            prop_assert_eq!(a[0].ambiguity, b[0].ambiguity);
            prop_assert_eq!(&a[0].event, &b[0].event);
        }
    }
}
