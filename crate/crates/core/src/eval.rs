//! Detection, recognition, and end-to-end scoring.
//!
//! Detection quality is IoU-thresholded precision/recall under greedy
//! one-to-one box matching. Recognition is exact full-string accuracy
//! after canonicalization: a partially correct string is simply wrong.
//! End-to-end combines both: a true positive must localize and read the
//! text. Every metric is reported twice, over semantic classes only
//! (teams, times, quarters) and over all classes.

use serde::{Deserialize, Serialize};

use crate::geometry::iou;
use crate::model::{canonicalize, BBox, SemanticClass};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub const DEFAULT_IOU_THRESHOLDS: [f64; 5] = [0.5, 0.6, 0.7, 0.8, 0.9];

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("evaluation set is empty")]
    EmptyEvalSet,
    #[error("invalid evaluation config: {0}")]
    InvalidConfig(String),
}

/// Which ground-truth classes participate in scoring.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassScope {
    SemanticOnly,
    AllClasses,
}

/// How per-image counts aggregate into corpus metrics: pooled counts
/// (micro) or averaged per-image ratios (macro).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Micro,
    Macro,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub iou_thresholds: Vec<f64>,
    pub class_scope: ClassScope,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            iou_thresholds: DEFAULT_IOU_THRESHOLDS.to_vec(),
            class_scope: ClassScope::AllClasses,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.iou_thresholds.is_empty() {
            return Err(EvalError::InvalidConfig("no IoU thresholds".to_string()));
        }
        if self.iou_thresholds.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
            return Err(EvalError::InvalidConfig(
                "thresholds must lie in (0, 1]".to_string(),
            ));
        }
        if self.iou_thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(EvalError::InvalidConfig(
                "thresholds must be strictly ascending".to_string(),
            ));
        }
        Ok(())
    }
}

/// A detected or annotated text box with its recognized string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledBox {
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub text: String,
    pub class: SemanticClass,
}

/// One image's predictions and ground truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalSample {
    pub id: String,
    pub predictions: Vec<LabeledBox>,
    pub ground_truth: Vec<LabeledBox>,
}

/// Box-matching outcome for one image at one threshold.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    /// `(prediction index, ground-truth index, iou)` for each match.
    pub matched_pairs: Vec<(usize, usize, f64)>,
}

/// Greedy one-to-one matching in descending IoU order over pairs at or
/// above the threshold; ties break on lower prediction index, then lower
/// ground-truth index. Matched pairs are TP, unmatched predictions FP,
/// unmatched ground truths FN.
pub fn match_boxes(preds: &[BBox], gts: &[BBox], threshold: f64) -> MatchResult {
    let mut candidates: Vec<(usize, usize, f64)> = Vec::new();
    for (i, p) in preds.iter().enumerate() {
        for (j, g) in gts.iter().enumerate() {
            let overlap = iou(p, g);
            if overlap >= threshold {
                candidates.push((i, j, overlap));
            }
        }
    }
    candidates.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));

    let mut pred_used = vec![false; preds.len()];
    let mut gt_used = vec![false; gts.len()];
    let mut matched_pairs = Vec::new();
    for (i, j, overlap) in candidates {
        if !pred_used[i] && !gt_used[j] {
            pred_used[i] = true;
            gt_used[j] = true;
            matched_pairs.push((i, j, overlap));
        }
    }
    let tp = matched_pairs.len() as u64;
    MatchResult {
        tp,
        fp: preds.len() as u64 - tp,
        fn_: gts.len() as u64 - tp,
        matched_pairs,
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Corpus precision/recall from per-image match results.
pub fn detection_pr(
    matches: &[MatchResult],
    aggregation: Aggregation,
) -> Result<(f64, f64), EvalError> {
    if matches.is_empty() {
        return Err(EvalError::EmptyEvalSet);
    }
    match aggregation {
        Aggregation::Micro => {
            let tp: u64 = matches.iter().map(|m| m.tp).sum();
            let fp: u64 = matches.iter().map(|m| m.fp).sum();
            let fn_: u64 = matches.iter().map(|m| m.fn_).sum();
            Ok((ratio(tp, tp + fp), ratio(tp, tp + fn_)))
        }
        Aggregation::Macro => {
            let n = matches.len() as f64;
            let p: f64 = matches.iter().map(|m| ratio(m.tp, m.tp + m.fp)).sum::<f64>() / n;
            let r: f64 = matches.iter().map(|m| ratio(m.tp, m.tp + m.fn_)).sum::<f64>() / n;
            Ok((p, r))
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RecognitionAccuracy {
    pub accuracy: f64,
    pub correct: u64,
    pub incorrect: u64,
}

/// Exact full-string accuracy over matched pairs, canonicalized. No
/// partial credit: one wrong character makes the pair incorrect.
pub fn recognition_accuracy(pairs: &[(String, String)]) -> RecognitionAccuracy {
    let correct = pairs
        .iter()
        .filter(|(pred, gt)| canonicalize(pred) == canonicalize(gt))
        .count() as u64;
    let incorrect = pairs.len() as u64 - correct;
    RecognitionAccuracy {
        accuracy: ratio(correct, correct + incorrect),
        correct,
        incorrect,
    }
}

fn is_semantic(class: SemanticClass) -> bool {
    matches!(
        class,
        SemanticClass::Team | SemanticClass::Time | SemanticClass::Quarter
    )
}

fn in_scope(class: SemanticClass, scope: ClassScope) -> bool {
    match scope {
        ClassScope::AllClasses => true,
        ClassScope::SemanticOnly => is_semantic(class),
    }
}

fn scoped<'a>(boxes: &'a [LabeledBox], scope: ClassScope) -> Vec<&'a LabeledBox> {
    boxes.iter().filter(|b| in_scope(b.class, scope)).collect()
}

/// Detection matching for one sample under a class scope.
pub fn match_sample(sample: &EvalSample, threshold: f64, scope: ClassScope) -> MatchResult {
    let preds = scoped(&sample.predictions, scope);
    let gts = scoped(&sample.ground_truth, scope);
    match_boxes(
        &preds.iter().map(|b| b.bbox).collect::<Vec<_>>(),
        &gts.iter().map(|b| b.bbox).collect::<Vec<_>>(),
        threshold,
    )
}

/// Recognized-string pairs for the matched boxes of one sample.
pub fn matched_string_pairs(
    sample: &EvalSample,
    threshold: f64,
    scope: ClassScope,
) -> Vec<(String, String)> {
    let preds = scoped(&sample.predictions, scope);
    let gts = scoped(&sample.ground_truth, scope);
    match_sample(sample, threshold, scope)
        .matched_pairs
        .iter()
        .map(|(i, j, _)| (preds[*i].text.clone(), gts[*j].text.clone()))
        .collect()
}

/// End-to-end matching: a pair is a true positive only when its IoU
/// clears the threshold and its canonicalized strings agree; a matched
/// pair with a wrong string costs both a false positive and a false
/// negative.
pub fn e2e_match_sample(sample: &EvalSample, threshold: f64, scope: ClassScope) -> MatchResult {
    let preds = scoped(&sample.predictions, scope);
    let gts = scoped(&sample.ground_truth, scope);
    let detection = match_boxes(
        &preds.iter().map(|b| b.bbox).collect::<Vec<_>>(),
        &gts.iter().map(|b| b.bbox).collect::<Vec<_>>(),
        threshold,
    );
    let matched_pairs: Vec<(usize, usize, f64)> = detection
        .matched_pairs
        .into_iter()
        .filter(|(i, j, _)| canonicalize(&preds[*i].text) == canonicalize(&gts[*j].text))
        .collect();
    let tp = matched_pairs.len() as u64;
    MatchResult {
        tp,
        fp: preds.len() as u64 - tp,
        fn_: gts.len() as u64 - tp,
        matched_pairs,
    }
}

/// One metrics-table row: every score at one IoU threshold, semantic
/// scope (`_sc`) and all classes (`_ac`) side by side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub iou: f64,
    pub p_sc: f64,
    pub r_sc: f64,
    pub p_ac: f64,
    pub r_ac: f64,
    pub acc_sc: f64,
    pub acc_ac: f64,
    pub p_e2e_sc: f64,
    pub r_e2e_sc: f64,
    pub p_e2e_ac: f64,
    pub r_e2e_ac: f64,
}

fn scope_metrics(
    samples: &[EvalSample],
    threshold: f64,
    scope: ClassScope,
    aggregation: Aggregation,
) -> Result<(f64, f64, f64, f64, f64), EvalError> {
    #[cfg(feature = "parallel")]
    let per_sample: Vec<(MatchResult, Vec<(String, String)>, MatchResult)> = samples
        .par_iter()
        .map(|s| {
            (
                match_sample(s, threshold, scope),
                matched_string_pairs(s, threshold, scope),
                e2e_match_sample(s, threshold, scope),
            )
        })
        .collect();
    #[cfg(not(feature = "parallel"))]
    let per_sample: Vec<(MatchResult, Vec<(String, String)>, MatchResult)> = samples
        .iter()
        .map(|s| {
            (
                match_sample(s, threshold, scope),
                matched_string_pairs(s, threshold, scope),
                e2e_match_sample(s, threshold, scope),
            )
        })
        .collect();

    let detection: Vec<MatchResult> = per_sample.iter().map(|(d, _, _)| d.clone()).collect();
    let e2e: Vec<MatchResult> = per_sample.iter().map(|(_, _, e)| e.clone()).collect();
    let pairs: Vec<(String, String)> = per_sample
        .into_iter()
        .flat_map(|(_, pairs, _)| pairs)
        .collect();

    let (p, r) = detection_pr(&detection, aggregation)?;
    // Accuracy is a pair-level metric; it stays pooled under either
    // aggregation.
    let acc = recognition_accuracy(&pairs).accuracy;
    let (pe, re) = detection_pr(&e2e, aggregation)?;
    Ok((p, r, acc, pe, re))
}

/// Full metrics table over the corpus: one row per configured threshold.
pub fn evaluate(
    samples: &[EvalSample],
    config: &EvalConfig,
    aggregation: Aggregation,
) -> Result<Vec<EvalRow>, EvalError> {
    config.validate()?;
    if samples.is_empty() {
        return Err(EvalError::EmptyEvalSet);
    }
    let mut rows = Vec::with_capacity(config.iou_thresholds.len());
    for &threshold in &config.iou_thresholds {
        let (p_sc, r_sc, acc_sc, p_e2e_sc, r_e2e_sc) =
            scope_metrics(samples, threshold, ClassScope::SemanticOnly, aggregation)?;
        let (p_ac, r_ac, acc_ac, p_e2e_ac, r_e2e_ac) =
            scope_metrics(samples, threshold, ClassScope::AllClasses, aggregation)?;
        rows.push(EvalRow {
            iou: threshold,
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
    Ok(rows)
}
