//! Acceptance gate: one test per release criterion, each printing a
//! PASS line (run with `--nocapture` to see them). Tolerances are pinned
//! here, not configurable.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use scoreclock::align::{
    align_segments, alignment_stats, segment_readings, FeedIndex, DEFAULT_MAX_FRAME_GAP,
};
use scoreclock::augment::{
    apply_plans, build_histogram, density_variance, plan_augmentation, Axis,
};
use scoreclock::eval::{
    e2e_match_sample, evaluate, match_boxes, match_sample, Aggregation, ClassScope, EvalConfig,
    EvalSample, LabeledBox,
};
use scoreclock::geometry::{
    compare_strategies, resize_with_strategy, ResizeStrategy, DEFAULT_BUCKET_WIDTH,
};
use scoreclock::kc::{distill, kc4_temporal_filter, Kc4Mode, KcStatus, VideoCounts};
use scoreclock::synth::{corrupt, generate_game, CorruptionEvent, NoiseSpec};
use scoreclock::{BBox, GameClockReading, LeagueProfile, Period, SemanticClass};

const EXACT: f64 = 0.0;
const FLOAT_EPS: f64 = 1e-9;
/// Criterion 5: replayed densities must sit within 10% of uniform.
const DENSITY_BAND: f64 = 0.10;

fn pass(n: usize, name: &str) {
    println!("acceptance criterion {n} ({name}): PASS");
}

fn reading(frame: i64, time_s: f64, quarter: Period) -> GameClockReading {
    GameClockReading {
        teams: ("gs".to_string(), "phx".to_string()),
        quarter,
        time_s,
        source_frame_id: frame,
        source_boxes: BTreeMap::new(),
    }
}

#[test]
fn criterion_1_partition_arithmetic() {
    // The published corpus tallies must satisfy the partition identity.
    let nba_row = VideoCounts {
        noisy_total: 80049,
        clean: 65983,
        rejected_kc1: 6677,
        rejected_kc4: 7389,
        corrected: 0,
        short_runs: 0,
    };
    assert!(nba_row.is_partition());
    assert_eq!(6677 + 7389 + 65983, 80049);
    let soccer_row = VideoCounts {
        noisy_total: 20437,
        clean: 18838,
        rejected_kc1: 378,
        rejected_kc4: 1221,
        corrected: 0,
        short_runs: 0,
    };
    assert!(soccer_row.is_partition());
    assert_eq!(378 + 1221 + 18838, 20437);

    // A corpus shaped the same way: mostly clean, some existence
    // failures, some temporal failures.
    for profile in [LeagueProfile::nba(), LeagueProfile::soccer()] {
        let game = generate_game(&profile, 600, 2, 31);
        let spec = NoiseSpec {
            char_substitution_rate: 0.04,
            box_jitter_px: 0.0,
            drop_detection_rate: 0.03,
            time_spike_rate: 0.04,
            seed: 47,
        };
        let (noisy, _) = corrupt(&game.records, &spec);
        let (outcomes, report) = distill(&noisy, &profile, Kc4Mode::Discard);
        assert_eq!(outcomes.len(), 600);
        assert_eq!(report.totals.noisy_total, 600);
        assert!(report.totals.is_partition(), "partition broke: {:?}", report.totals);
        assert!(report.totals.rejected_kc1 > 0);
        assert!(report.totals.rejected_kc4 > 0);
        assert!(report.totals.clean > 0);
        let mut summed = VideoCounts::default();
        for counts in report.per_video.values() {
            assert!(counts.is_partition());
            summed.absorb(counts);
        }
        assert_eq!(summed, report.totals);
    }
    let _ = EXACT;
    pass(1, "partition arithmetic");
}

#[test]
fn criterion_2_monotonicity_suite() {
    let profiles = [LeagueProfile::nba(), LeagueProfile::soccer()];
    for profile in &profiles {
        let decreasing = profile.monotonic_direction
            == scoreclock::MonotonicDirection::Decreasing;
        let quarter = if profile.continuous_time {
            Period::Marker(String::new())
        } else {
            Period::Quarter(1)
        };
        for seed in 0..1000u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let len = rng.gen_range(10..40);
            let mut t = if decreasing { 700.0 } else { 10.0 };
            let clean: Vec<f64> = (0..len)
                .map(|_| {
                    let step = rng.gen_range(0.5..3.0);
                    t += if decreasing { -step } else { step };
                    t
                })
                .collect();

            // Single interior spike: Correct mode must restore the run.
            let at = rng.gen_range(1..len - 1);
            let mut spiked = clean.clone();
            spiked[at] += if decreasing { 500.0 } else { -500.0 };
            let run: Vec<GameClockReading> = spiked
                .iter()
                .enumerate()
                .map(|(i, v)| reading(i as i64, *v, quarter.clone()))
                .collect();
            let out = kc4_temporal_filter(&run, profile, Kc4Mode::Correct);
            assert_monotone(&out.kept, decreasing, seed);
            let fixed = out
                .kept
                .iter()
                .position(|r| r.source_frame_id == at as i64)
                .unwrap_or_else(|| panic!("seed {seed}: spiked frame was dropped"));
            assert!(out.corrected_frames.contains(&(at as i64)));
            if fixed > 0 {
                let hi = out.kept[fixed - 1].time_s;
                let lo = out.kept[fixed].time_s;
                if decreasing {
                    assert!(lo <= hi + FLOAT_EPS);
                } else {
                    assert!(lo + FLOAT_EPS >= hi);
                }
            }
            assert_eq!(out.kept.len() + out.rejected.len(), run.len());

            // Arbitrary multi-frame noise: output stays monotone in both
            // modes, with no reading lost or invented.
            let mut noisy = clean.clone();
            for v in noisy.iter_mut() {
                if rng.gen::<f64>() < 0.15 {
                    *v += rng.gen_range(-400.0..400.0);
                }
            }
            let run: Vec<GameClockReading> = noisy
                .iter()
                .enumerate()
                .map(|(i, v)| reading(i as i64, *v, quarter.clone()))
                .collect();
            for mode in [Kc4Mode::Discard, Kc4Mode::Correct] {
                let out = kc4_temporal_filter(&run, profile, mode);
                assert_monotone(&out.kept, decreasing, seed);
                assert_eq!(out.kept.len() + out.rejected.len(), run.len());
            }
        }
    }
    pass(2, "temporal filter monotonicity, 1000 seeded runs per direction");
}

fn assert_monotone(kept: &[GameClockReading], decreasing: bool, seed: u64) {
    for pair in kept.windows(2) {
        let ok = if decreasing {
            pair[0].time_s >= pair[1].time_s
        } else {
            pair[0].time_s <= pair[1].time_s
        };
        assert!(
            ok,
            "seed {seed}: non-monotone output {} -> {}",
            pair[0].time_s, pair[1].time_s
        );
    }
}

#[test]
fn criterion_3_resize_optimality_sweep() {
    const LIMIT: u32 = 2048;
    let mut dims: Vec<[f64; 3]> = Vec::with_capacity(LIMIT as usize + 1);
    dims.push([0.0; 3]);
    for x in 1..=LIMIT {
        let mut row = [0.0; 3];
        for (i, strategy) in ResizeStrategy::ALL.iter().enumerate() {
            let d = resize_with_strategy(x, x, 32, *strategy).unwrap();
            assert_eq!(d.resized.0 % 32, 0, "x={x} {strategy:?}");
            assert_eq!(d.resized.1 % 32, 0, "x={x} {strategy:?}");
            row[i] = d.per_dim_distortion.0;
        }
        dims.push(row);
    }
    // Exhaustive pair sweep over the precomputed per-axis distortions;
    // rounding one axis never depends on the other.
    for w in 1..=LIMIT as usize {
        for h in 1..=LIMIT as usize {
            let amal_w = dims[w][2];
            let amal_h = dims[h][2];
            assert!(
                amal_w <= dims[w][0] && amal_w <= dims[w][1]
                    && amal_h <= dims[h][0] && amal_h <= dims[h][1],
                "amalgamated lost at ({w}, {h})"
            );
        }
    }
    pass(3, "exhaustive grid-resize optimality on [1,2048]^2");
}

#[test]
fn criterion_4_wide_clock_strategy_comparison() {
    // Clock-like sizes: wide boxes, w/h >= 2, widths spanning 200..800.
    let mut sizes = Vec::new();
    for w in (200..=800u32).step_by(1) {
        for ratio in [20, 25, 30, 35, 40, 45, 50] {
            let h = (w * 10 / ratio).max(1);
            if w >= 2 * h {
                sizes.push((w, h));
            }
        }
    }
    let cmp = compare_strategies(&sizes, 32, DEFAULT_BUCKET_WIDTH).unwrap();

    let amal_best = cmp.strictly_best(ResizeStrategy::Amalgamated);
    let up_best = cmp.strictly_best(ResizeStrategy::UpOnly);
    let down_best = cmp.strictly_best(ResizeStrategy::DownOnly);
    assert!(
        amal_best > up_best && amal_best > down_best,
        "strictly-best counts: amalgamated {amal_best}, up {up_best}, down {down_best}"
    );

    // Aspect fidelity, bucket by bucket: the amalgamated strategy must
    // hold the lowest mean aspect distortion in a strict majority.
    let buckets = cmp.rows.len() / 3;
    let amal_aspect = cmp.lowest_mean_aspect(ResizeStrategy::Amalgamated);
    assert!(
        amal_aspect as usize * 2 > buckets,
        "amalgamated lowest mean aspect in only {amal_aspect} of {buckets} buckets"
    );
    pass(4, "wide-clock comparison favors amalgamated resizing");
}

#[test]
fn criterion_5_augmentation_normalization() {
    let mut sizes: Vec<(f64, f64)> = vec![(100.0, 40.0); 90];
    sizes.extend(vec![(120.0, 40.0); 10]);
    let edges = [80.0, 110.0, 140.0];
    let hist = build_histogram(&sizes, &edges, Axis::Width).unwrap().histogram;
    let pre_variance = density_variance(&hist.counts);

    let range = (0.4, 1.2);
    let plans = plan_augmentation(&hist, &sizes, "nba", 2024, range).unwrap();
    for plan in &plans {
        assert!(
            plan.scale == 1.0 || (range.0..=range.1).contains(&plan.scale),
            "scale {} outside [{}, {}]",
            plan.scale,
            range.0,
            range.1
        );
        assert!(!plan.infeasible);
    }

    let replayed = build_histogram(&apply_plans(&sizes, &plans), &edges, Axis::Width)
        .unwrap()
        .histogram;
    let post_variance = density_variance(&replayed.counts);
    assert!(
        post_variance <= pre_variance,
        "variance rose: {pre_variance} -> {post_variance}"
    );
    let total: u64 = replayed.counts.iter().sum();
    let uniform = 1.0 / replayed.counts.len() as f64;
    for count in &replayed.counts {
        let density = *count as f64 / total as f64;
        assert!(
            (density - uniform).abs() <= DENSITY_BAND * uniform + FLOAT_EPS,
            "density {density} outside 10% of uniform {uniform}"
        );
    }
    pass(5, "two-bucket skew normalizes within 10% of uniform");
}

#[test]
fn criterion_6_alignment_round_trip() {
    let nba = LeagueProfile::nba();
    let game = generate_game(&nba, 300, 2, 61);
    let (noisy, log) = corrupt(&game.records, &NoiseSpec::zero(0));
    assert!(log.is_empty());
    let (outcomes, _) = distill(&noisy, &nba, Kc4Mode::Discard);
    let readings: Vec<GameClockReading> = outcomes
        .into_iter()
        .map(|o| o.reading.expect("zero-noise records all distill clean"))
        .collect();
    assert_eq!(readings, game.readings);

    let runs = segment_readings(&readings, DEFAULT_MAX_FRAME_GAP);
    let full_index = FeedIndex::new(&game.feed);
    let segments = align_segments(&game.video_id, &runs, &full_index);
    let stats = alignment_stats(&segments);
    assert_eq!(stats.aligned, stats.total_runs);
    assert_eq!(stats.aligned_pct, 100.0);

    for k in [1usize, 2, 5] {
        let removed: Vec<usize> = [7, 61, 150, 210, 280][..k].to_vec();
        let reduced: Vec<_> = game
            .feed
            .iter()
            .enumerate()
            .filter(|(i, _)| !removed.contains(i))
            .map(|(_, e)| e.clone())
            .collect();
        let segments = align_segments(&game.video_id, &runs, &FeedIndex::new(&reduced));
        let stats = alignment_stats(&segments);
        assert_eq!(stats.unmatched as usize, k, "k={k}");
        assert_eq!(stats.aligned as usize, runs.len() - k, "k={k}");
        assert_eq!(stats.ambiguous, 0, "k={k}");
    }
    pass(6, "alignment round trip, exact unmatched counts");
}

#[test]
fn criterion_7_evaluation_kit() {
    // Hand corpus: nested prediction boxes give exact IoU h/10 against
    // each 10x10 ground truth, so per-threshold counts are countable by
    // hand: IoUs {1.0, .85, .75, .65, .55, .45} clear the default
    // thresholds {5, 4, 3, 2, 1} times.
    let ious = [1.0, 0.85, 0.75, 0.65, 0.55, 0.45];
    let mut preds = Vec::new();
    let mut gts = Vec::new();
    for (i, v) in ious.iter().enumerate() {
        let x = i as f64 * 40.0;
        gts.push(LabeledBox {
            bbox: BBox::new(x, 0.0, x + 10.0, 10.0),
            text: format!("t{i}"),
            class: SemanticClass::Team,
        });
        preds.push(LabeledBox {
            bbox: BBox::new(x, 0.0, x + 10.0, v * 10.0),
            text: format!("t{i}"),
            class: SemanticClass::Team,
        });
    }
    let samples = vec![EvalSample {
        id: "hand".to_string(),
        predictions: preds,
        ground_truth: gts,
    }];
    let rows = evaluate(&samples, &EvalConfig::default(), Aggregation::Micro).unwrap();
    let expected_tp = [5.0, 4.0, 3.0, 2.0, 1.0];
    for (row, tp) in rows.iter().zip(expected_tp) {
        let want = tp / 6.0;
        assert!((row.p_ac - want).abs() <= FLOAT_EPS, "iou {}: {} vs {want}", row.iou, row.p_ac);
        assert!((row.r_ac - want).abs() <= FLOAT_EPS);
        assert!((row.p_e2e_ac - want).abs() <= FLOAT_EPS);
        assert!((row.r_e2e_ac - want).abs() <= FLOAT_EPS);
        assert_eq!(row.p_sc, row.p_ac);
    }

    // 1000 random fixtures: threshold monotonicity, e2e dominance, and
    // the count identities, with zero violations.
    let vocab = ["phx", "gs", "lal", "10:32", ":17", "108"];
    for seed in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_preds = rng.gen_range(0..8);
        let n_gts = rng.gen_range(0..8);
        let mut boxes = |n: usize| -> Vec<LabeledBox> {
            (0..n)
                .map(|_| {
                    let x = rng.gen_range(0.0..80.0);
                    let y = rng.gen_range(0.0..80.0);
                    let w = rng.gen_range(4.0..25.0);
                    let h = rng.gen_range(4.0..25.0);
                    LabeledBox {
                        bbox: BBox::new(x, y, x + w, y + h),
                        text: vocab[rng.gen_range(0..vocab.len())].to_string(),
                        class: SemanticClass::Team,
                    }
                })
                .collect()
        };
        let sample = EvalSample {
            id: format!("r{seed}"),
            predictions: boxes(n_preds),
            ground_truth: boxes(n_gts),
        };
        let mut last_tp = u64::MAX;
        for threshold in [0.5, 0.6, 0.7, 0.8, 0.9] {
            let det = match_sample(&sample, threshold, ClassScope::AllClasses);
            let e2e = e2e_match_sample(&sample, threshold, ClassScope::AllClasses);
            assert!(det.tp <= last_tp, "seed {seed}: TP rose with threshold");
            assert!(e2e.tp <= det.tp, "seed {seed}: e2e beat detection");
            assert_eq!(det.tp + det.fp, n_preds as u64);
            assert_eq!(det.tp + det.fn_, n_gts as u64);
            assert_eq!(e2e.tp + e2e.fp, n_preds as u64);
            assert_eq!(e2e.tp + e2e.fn_, n_gts as u64);
            last_tp = det.tp;
        }
        let raw: Vec<BBox> = sample.predictions.iter().map(|b| b.bbox).collect();
        let gt_raw: Vec<BBox> = sample.ground_truth.iter().map(|b| b.bbox).collect();
        let m = match_boxes(&raw, &gt_raw, 0.5);
        assert!(m.tp <= raw.len().min(gt_raw.len()) as u64);
    }
    pass(7, "evaluation kit exact P/R and dominance, 1000 fixtures");
}

#[test]
fn criterion_8_noisy_recovery_no_false_cleans() {
    let spec_template = |seed: u64| NoiseSpec {
        char_substitution_rate: 0.05,
        box_jitter_px: 0.0,
        drop_detection_rate: 0.0,
        time_spike_rate: 0.05,
        seed,
    };
    for profile in [LeagueProfile::nba(), LeagueProfile::soccer()] {
        for seed in [3u64, 17, 42, 99, 2024] {
            let game = generate_game(&profile, 1500, 2, seed);
            let (noisy, log) = corrupt(&game.records, &spec_template(seed * 7 + 1));
            assert!(!log.is_empty(), "noise spec produced no corruption at seed {seed}");
            let truth: BTreeMap<i64, &GameClockReading> = game
                .readings
                .iter()
                .map(|r| (r.source_frame_id, r))
                .collect();
            for mode in [Kc4Mode::Discard, Kc4Mode::Correct] {
                let (outcomes, report) = distill(&noisy, &profile, mode);
                assert!(report.totals.is_partition());
                // Every logged corruption must surface as something other
                // than a clean label.
                for event in &log {
                    let idx = event.record_index();
                    if matches!(event, CorruptionEvent::BoxJitter { .. }) {
                        continue;
                    }
                    assert_ne!(
                        outcomes[idx].status,
                        KcStatus::CleanLabel,
                        "{:?} corruption at record {idx} survived as clean ({mode:?})",
                        event
                    );
                }
                // And every clean label must carry exactly the ground
                // truth reading for its frame.
                for outcome in &outcomes {
                    if outcome.status != KcStatus::CleanLabel {
                        continue;
                    }
                    let got = outcome.reading.as_ref().expect("clean outcomes carry readings");
                    let want = truth[&outcome.record.frame_id];
                    assert_eq!(got, want, "false clean at frame {}", outcome.record.frame_id);
                }
            }
        }
    }
    pass(8, "noisy recovery with zero false cleans");
}
