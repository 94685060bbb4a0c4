//! Size-bias correction: bucket histograms, scale planning, stratified
//! sampling, and cross-league label-correction scale pairs.
//!
//! Clock crops cluster around a few native sizes per league, which skews
//! any detector trained on them. [`plan_augmentation`] assigns each image
//! an isotropic scale factor that moves mass from over-populated size
//! buckets toward under-populated ones, never increasing the variance of
//! bucket densities. Plans are data only; executing them on pixels is an
//! external job's problem.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Default bucket count when no explicit edges are configured.
pub const DEFAULT_BUCKET_COUNT: usize = 8;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum AugmentError {
    #[error("no sizes provided")]
    EmptyInput,
    #[error("bucket edges must be strictly increasing with at least two entries")]
    InvalidEdges,
    #[error("histogram counts do not match its edges")]
    MalformedHistogram,
    #[error("scale range ({0}, {1}) must satisfy 0 < s_min < s_max")]
    InvalidRange(f64, f64),
    #[error("histogram has no mass")]
    DegenerateHistogram,
}

/// Which measurement of a crop a histogram is over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Width,
    Height,
    TextBoxWidth,
    TextBoxHeight,
}

impl Axis {
    fn extract(&self, size: (f64, f64)) -> f64 {
        match self {
            Axis::Width | Axis::TextBoxWidth => size.0,
            Axis::Height | Axis::TextBoxHeight => size.1,
        }
    }
}

/// Population counts over half-open pixel-value buckets
/// `[edges[i], edges[i+1])`. Values outside the edges are clipped into
/// the boundary buckets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketHistogram {
    pub axis: Axis,
    pub bucket_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl BucketHistogram {
    pub fn validate(&self) -> Result<(), AugmentError> {
        validate_edges(&self.bucket_edges)?;
        if self.counts.len() + 1 != self.bucket_edges.len() {
            return Err(AugmentError::MalformedHistogram);
        }
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Bucket with the highest count, ties to the lowest index.
    pub fn modal_bucket(&self) -> Option<usize> {
        let max = *self.counts.iter().max()?;
        if max == 0 {
            return None;
        }
        self.counts.iter().position(|c| *c == max)
    }

    pub fn bucket_center(&self, index: usize) -> f64 {
        (self.bucket_edges[index] + self.bucket_edges[index + 1]) / 2.0
    }
}

/// A histogram plus which input indices had to be clipped into it.
#[derive(Clone, Debug, PartialEq)]
pub struct HistogramReport {
    pub histogram: BucketHistogram,
    pub clipped: Vec<usize>,
}

/// One image's planned rescale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentPlan {
    pub image_index: usize,
    pub league_id: String,
    /// Isotropic scale factor, always within the configured range.
    pub scale: f64,
    /// Bucket the scaled measurement lands in.
    pub target_bucket: usize,
    /// Set when the image's bucket is over-populated but no scale in
    /// range reaches an under-populated bucket; the scale stays 1.
    pub infeasible: bool,
}

fn validate_edges(edges: &[f64]) -> Result<(), AugmentError> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(AugmentError::InvalidEdges);
    }
    if edges.iter().any(|e| !e.is_finite()) {
        return Err(AugmentError::InvalidEdges);
    }
    Ok(())
}

/// Bucket index for a value, clipping out-of-range values to the
/// boundary buckets. The second element reports whether clipping fired.
fn bucket_of(value: f64, edges: &[f64]) -> (usize, bool) {
    let last = edges.len() - 1;
    if value < edges[0] {
        return (0, true);
    }
    if value >= edges[last] {
        return (last - 1, true);
    }
    let i = edges.partition_point(|e| *e <= value) - 1;
    (i, false)
}

/// Equal-width bucket edges spanning the observed range of `axis` over
/// `sizes`, the default when no edges are configured.
pub fn default_edges(sizes: &[(f64, f64)], axis: Axis) -> Result<Vec<f64>, AugmentError> {
    if sizes.is_empty() {
        return Err(AugmentError::EmptyInput);
    }
    let values: Vec<f64> = sizes.iter().map(|s| axis.extract(*s)).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(AugmentError::InvalidEdges);
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if max > min { max - min } else { 1.0 };
    let width = span / DEFAULT_BUCKET_COUNT as f64;
    let mut edges: Vec<f64> = (0..=DEFAULT_BUCKET_COUNT)
        .map(|i| min + width * i as f64)
        .collect();
    // Keep the observed maximum inside the top bucket rather than on its
    // open edge.
    let last = edges.len() - 1;
    edges[last] = edges[last].max(max + width * 1e-9 + f64::EPSILON);
    Ok(edges)
}

/// Counts sizes into buckets along one axis.
pub fn build_histogram(
    sizes: &[(f64, f64)],
    edges: &[f64],
    axis: Axis,
) -> Result<HistogramReport, AugmentError> {
    if sizes.is_empty() {
        return Err(AugmentError::EmptyInput);
    }
    validate_edges(edges)?;

    #[cfg(feature = "parallel")]
    let placed: Vec<(usize, bool)> = sizes
        .par_iter()
        .map(|size| bucket_of(axis.extract(*size), edges))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let placed: Vec<(usize, bool)> = sizes
        .iter()
        .map(|size| bucket_of(axis.extract(*size), edges))
        .collect();

    let mut counts = vec![0u64; edges.len() - 1];
    let mut clipped = Vec::new();
    for (i, (bucket, was_clipped)) in placed.iter().enumerate() {
        counts[*bucket] += 1;
        if *was_clipped {
            clipped.push(i);
        }
    }
    Ok(HistogramReport {
        histogram: BucketHistogram { axis, bucket_edges: edges.to_vec(), counts },
        clipped,
    })
}

/// Population variance of bucket densities (counts divided by total).
pub fn density_variance(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 || counts.is_empty() {
        return 0.0;
    }
    let n = counts.len() as f64;
    let densities: Vec<f64> = counts.iter().map(|c| *c as f64 / total as f64).collect();
    let mean = densities.iter().sum::<f64>() / n;
    densities.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n
}

/// Scale interval `[lo, hi)` that lands `value` inside the bucket, clamped
/// to the admissible range. Empty when `lo >= hi`.
fn feasible_scales(
    value: f64,
    edges: &[f64],
    bucket: usize,
    range: (f64, f64),
) -> Option<(f64, f64)> {
    let lo = (edges[bucket] / value).max(range.0);
    let hi = (edges[bucket + 1] / value).min(range.1);
    if lo < hi {
        Some((lo, hi))
    } else {
        None
    }
}

/// Plans one isotropic rescale per image, in input order, pushing bucket
/// densities toward uniform.
///
/// The histogram supplies the bucketing scheme; working counts are
/// recomputed from `sizes` so that replaying the plan through
/// [`build_histogram`] reproduces the planner's final state exactly. An
/// image is moved only when its own bucket holds more than the uniform
/// share and some strictly less-populated bucket is reachable within the
/// scale range; each such move lowers the density variance, so the
/// post-plan variance never exceeds the pre-plan variance. Images that
/// sit in over-populated buckets nothing can be done about are flagged
/// infeasible and keep scale 1.
pub fn plan_augmentation(
    hist: &BucketHistogram,
    sizes: &[(f64, f64)],
    league_id: &str,
    rng_seed: u64,
    range: (f64, f64),
) -> Result<Vec<AugmentPlan>, AugmentError> {
    hist.validate()?;
    if sizes.is_empty() {
        return Err(AugmentError::EmptyInput);
    }
    let (s_min, s_max) = range;
    if !(s_min.is_finite() && s_max.is_finite() && s_min > 0.0 && s_min < s_max) {
        return Err(AugmentError::InvalidRange(s_min, s_max));
    }

    let edges = &hist.bucket_edges;
    let n_buckets = edges.len() - 1;
    let mut cur = vec![0u64; n_buckets];
    for size in sizes {
        cur[bucket_of(hist.axis.extract(*size), edges).0] += 1;
    }
    let uniform_share = sizes.len() as f64 / n_buckets as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut plans = Vec::with_capacity(sizes.len());
    for (i, size) in sizes.iter().enumerate() {
        let value = hist.axis.extract(*size);
        let src = bucket_of(value, edges).0;
        let mut plan = AugmentPlan {
            image_index: i,
            league_id: league_id.to_string(),
            scale: 1.0,
            target_bucket: src,
            infeasible: false,
        };
        let overfull = cur[src] as f64 > uniform_share;
        if overfull {
            let candidate = (0..n_buckets)
                .filter(|b| *b != src && cur[*b] + 2 <= cur[src])
                .filter_map(|b| feasible_scales(value, edges, b, range).map(|iv| (b, iv)))
                .min_by(|(a, _), (b, _)| cur[*a].cmp(&cur[*b]).then(a.cmp(b)));
            match candidate {
                Some((_, (lo, hi))) => {
                    let scale = rng.gen_range(lo..hi);
                    // Reccompute the landing bucket from the drawn scale so
                    // floating-point edge effects cannot desynchronize the
                    // plan from a later replay.
                    let (land, _) = bucket_of(value * scale, edges);
                    if land != src && cur[land] + 2 <= cur[src] {
                        cur[src] -= 1;
                        cur[land] += 1;
                        plan.scale = scale;
                        plan.target_bucket = land;
                    }
                }
                None => plan.infeasible = true,
            }
        }
        plans.push(plan);
    }
    Ok(plans)
}

/// Applies planned scales to sizes, one plan per size in order.
pub fn apply_plans(sizes: &[(f64, f64)], plans: &[AugmentPlan]) -> Vec<(f64, f64)> {
    sizes
        .iter()
        .zip(plans)
        .map(|(size, plan)| (size.0 * plan.scale, size.1 * plan.scale))
        .collect()
}

/// Uniform without-replacement sample of at most `k_per_style` records
/// per style, returned as input indices in ascending order.
pub fn stratified_sample<T, F>(
    records: &[T],
    style: F,
    k_per_style: usize,
    rng_seed: u64,
) -> Vec<usize>
where
    F: Fn(&T) -> &str,
{
    let mut by_style: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, record) in records.iter().enumerate() {
        by_style.entry(style(record)).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut selected = Vec::new();
    for indices in by_style.values() {
        let take = k_per_style.min(indices.len());
        for pick in rand::seq::index::sample(&mut rng, indices.len(), take) {
            selected.push(indices[pick]);
        }
    }
    selected.sort_unstable();
    selected
}

/// Per-image `(forward, inverse)` anisotropic scale pairs that move each
/// target size onto the source subdomain's modal bucket centers.
pub fn plan_label_correction(
    source_width: &BucketHistogram,
    source_height: &BucketHistogram,
    target_sizes: &[(f64, f64)],
) -> Result<Vec<((f64, f64), (f64, f64))>, AugmentError> {
    source_width.validate()?;
    source_height.validate()?;
    let wm = source_width.modal_bucket().ok_or(AugmentError::DegenerateHistogram)?;
    let hm = source_height.modal_bucket().ok_or(AugmentError::DegenerateHistogram)?;
    let modal = (source_width.bucket_center(wm), source_height.bucket_center(hm));
    target_sizes
        .iter()
        .map(|(w, h)| {
            if !(w.is_finite() && h.is_finite() && *w > 0.0 && *h > 0.0) {
                return Err(AugmentError::EmptyInput);
            }
            let forward = (modal.0 / w, modal.1 / h);
            Ok((forward, (1.0 / forward.0, 1.0 / forward.1)))
        })
        .collect()
}
