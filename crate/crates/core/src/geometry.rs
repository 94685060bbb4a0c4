//! Grid-constrained resizing, distortion accounting, and box arithmetic.
//!
//! Detector inputs must be multiples of a pixel grid (32 by default).
//! Rounding both dimensions the same way can distort small clock crops
//! badly, so [`resize_to_grid`] picks, per dimension, whichever of the
//! nearest lower and nearest upper multiples moves the value least in
//! relative terms. [`compare_strategies`] quantifies what that buys over
//! always rounding up or always rounding down.

use serde::{Deserialize, Serialize};

use crate::model::BBox;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Default width of the size buckets used when comparing strategies.
pub const DEFAULT_BUCKET_WIDTH: u32 = 64;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("dimensions must be positive, got {0}x{1}")]
    NonPositiveDimension(u32, u32),
    #[error("grid must be positive")]
    NonPositiveGrid,
    #[error("scale factors must be positive and finite, got ({0}, {1})")]
    NonPositiveScale(f64, f64),
    #[error("no sizes to compare")]
    EmptySizes,
}

/// How a size was moved onto the grid, with the distortion that cost.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResizeDecision {
    pub original: (u32, u32),
    pub resized: (u32, u32),
    /// Relative per-dimension deviation `(|w'-w|/w, |h'-h|/h)`.
    pub per_dim_distortion: (f64, f64),
    /// Relative aspect-ratio deviation `|(w'/h') * (h/w) - 1|`.
    pub aspect_distortion: f64,
}

/// Rounding strategy for moving a size onto the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResizeStrategy {
    UpOnly,
    DownOnly,
    Amalgamated,
}

impl ResizeStrategy {
    pub const ALL: [ResizeStrategy; 3] =
        [ResizeStrategy::UpOnly, ResizeStrategy::DownOnly, ResizeStrategy::Amalgamated];

    pub fn name(&self) -> &'static str {
        match self {
            ResizeStrategy::UpOnly => "up_only",
            ResizeStrategy::DownOnly => "down_only",
            ResizeStrategy::Amalgamated => "amalgamated",
        }
    }
}

fn round_dim(x: u32, grid: u32, strategy: ResizeStrategy) -> u32 {
    let lower = (x / grid) * grid;
    let upper = if lower == x { x } else { lower + grid };
    match strategy {
        ResizeStrategy::UpOnly => upper.max(grid),
        // Dimensions below the grid cannot shrink to zero; they are forced
        // up to one grid step like every other strategy.
        ResizeStrategy::DownOnly => lower.max(grid),
        ResizeStrategy::Amalgamated => {
            let lower = lower.max(grid);
            let upper = upper.max(grid);
            if x < grid {
                return grid;
            }
            let down_cost = relative_deviation(x, lower);
            let up_cost = relative_deviation(x, upper);
            // Ties prefer the upper multiple.
            if up_cost <= down_cost {
                upper
            } else {
                lower
            }
        }
    }
}

fn relative_deviation(original: u32, resized: u32) -> f64 {
    (f64::from(resized) - f64::from(original)).abs() / f64::from(original)
}

fn aspect_deviation(original: (u32, u32), resized: (u32, u32)) -> f64 {
    let (w, h) = (f64::from(original.0), f64::from(original.1));
    let (rw, rh) = (f64::from(resized.0), f64::from(resized.1));
    ((rw / rh) * (h / w) - 1.0).abs()
}

/// Resizes with an explicit strategy. See [`resize_to_grid`] for the
/// default amalgamated behavior.
pub fn resize_with_strategy(
    width: u32,
    height: u32,
    grid: u32,
    strategy: ResizeStrategy,
) -> Result<ResizeDecision, GeometryError> {
    if width == 0 || height == 0 {
        return Err(GeometryError::NonPositiveDimension(width, height));
    }
    if grid == 0 {
        return Err(GeometryError::NonPositiveGrid);
    }
    let resized = (round_dim(width, grid, strategy), round_dim(height, grid, strategy));
    Ok(ResizeDecision {
        original: (width, height),
        resized,
        per_dim_distortion: (
            relative_deviation(width, resized.0),
            relative_deviation(height, resized.1),
        ),
        aspect_distortion: aspect_deviation((width, height), resized),
    })
}

/// Moves a size onto the grid, independently choosing per dimension the
/// nearest multiple by relative deviation. Dimensions below the grid are
/// forced up to it; exact ties go to the upper multiple.
pub fn resize_to_grid(width: u32, height: u32, grid: u32) -> Result<ResizeDecision, GeometryError> {
    resize_with_strategy(width, height, grid, ResizeStrategy::Amalgamated)
}

/// Per-bucket aggregate for one strategy in a comparison sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyBucketRow {
    /// Half-open width range `[lo, hi)` of the bucket.
    pub bucket: (u32, u32),
    pub strategy: ResizeStrategy,
    pub sizes: u64,
    pub mean_aspect_distortion: f64,
    pub mean_dim_distortion: f64,
    /// Sizes in this bucket where the strategy's per-dimension distortion
    /// is strictly below both alternatives.
    pub strictly_best: u64,
}

/// Outcome of sweeping all three strategies over a size corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyComparison {
    pub rows: Vec<StrategyBucketRow>,
    /// Total strictly-best counts by strategy, on the per-dimension
    /// (size-fidelity) metric.
    pub strictly_best_totals: Vec<(ResizeStrategy, u64)>,
    /// Number of width buckets in which each strategy's mean aspect
    /// distortion is strictly the lowest.
    pub lowest_mean_aspect_buckets: Vec<(ResizeStrategy, u64)>,
}

impl StrategyComparison {
    pub fn strictly_best(&self, strategy: ResizeStrategy) -> u64 {
        self.strictly_best_totals
            .iter()
            .find(|(s, _)| *s == strategy)
            .map(|(_, n)| *n)
            .unwrap_or(0)
    }

    pub fn lowest_mean_aspect(&self, strategy: ResizeStrategy) -> u64 {
        self.lowest_mean_aspect_buckets
            .iter()
            .find(|(s, _)| *s == strategy)
            .map(|(_, n)| *n)
            .unwrap_or(0)
    }
}

struct SizeSweep {
    bucket_index: usize,
    // Indexed by ResizeStrategy::ALL order.
    aspect: [f64; 3],
    dim: [f64; 3],
}

fn sweep_size(size: (u32, u32), grid: u32, edges: &[u32]) -> SizeSweep {
    let mut aspect = [0.0; 3];
    let mut dim = [0.0; 3];
    for (i, strategy) in ResizeStrategy::ALL.iter().enumerate() {
        let decision = resize_with_strategy(size.0, size.1, grid, *strategy)
            .expect("sizes are validated before sweeping");
        aspect[i] = decision.aspect_distortion;
        dim[i] = (decision.per_dim_distortion.0 + decision.per_dim_distortion.1) / 2.0;
    }
    let bucket_index = match edges.iter().rposition(|lo| size.0 >= *lo) {
        Some(i) => i,
        None => 0,
    };
    SizeSweep { bucket_index, aspect, dim }
}

/// Sweeps every size through all three strategies and aggregates
/// distortion into width buckets of `bucket_width` pixels.
///
/// Two distortion readings are reported side by side: the aspect-ratio
/// deviation and the per-dimension deviation from the original size. The
/// strictly-best counts use the per-dimension metric, matching the goal of
/// staying closest to the original values; the per-bucket aspect means let
/// callers compare ratio fidelity as well.
pub fn compare_strategies(
    sizes: &[(u32, u32)],
    grid: u32,
    bucket_width: u32,
) -> Result<StrategyComparison, GeometryError> {
    if sizes.is_empty() {
        return Err(GeometryError::EmptySizes);
    }
    if grid == 0 || bucket_width == 0 {
        return Err(GeometryError::NonPositiveGrid);
    }
    if let Some((w, h)) = sizes.iter().find(|(w, h)| *w == 0 || *h == 0) {
        return Err(GeometryError::NonPositiveDimension(*w, *h));
    }

    let min_w = sizes.iter().map(|(w, _)| *w).min().expect("non-empty");
    let max_w = sizes.iter().map(|(w, _)| *w).max().expect("non-empty");
    let first_edge = (min_w / bucket_width) * bucket_width;
    let mut edges = Vec::new();
    let mut lo = first_edge;
    while lo <= max_w {
        edges.push(lo);
        lo += bucket_width;
    }

    #[cfg(feature = "parallel")]
    let sweeps: Vec<SizeSweep> =
        sizes.par_iter().map(|size| sweep_size(*size, grid, &edges)).collect();
    #[cfg(not(feature = "parallel"))]
    let sweeps: Vec<SizeSweep> =
        sizes.iter().map(|size| sweep_size(*size, grid, &edges)).collect();

    let n_buckets = edges.len();
    let mut counts = vec![0u64; n_buckets];
    let mut aspect_sums = vec![[0.0f64; 3]; n_buckets];
    let mut dim_sums = vec![[0.0f64; 3]; n_buckets];
    let mut best = vec![[0u64; 3]; n_buckets];
    for sweep in &sweeps {
        let b = sweep.bucket_index;
        counts[b] += 1;
        for i in 0..3 {
            aspect_sums[b][i] += sweep.aspect[i];
            dim_sums[b][i] += sweep.dim[i];
            let others = (0..3).filter(|j| *j != i);
            let mut strictly = true;
            for j in others {
                if sweep.dim[i] >= sweep.dim[j] {
                    strictly = false;
                }
            }
            if strictly {
                best[b][i] += 1;
            }
        }
    }

    let mut rows = Vec::new();
    let mut totals = [0u64; 3];
    let mut lowest_aspect = [0u64; 3];
    for b in 0..n_buckets {
        if counts[b] == 0 {
            continue;
        }
        let n = counts[b] as f64;
        let means: Vec<f64> = (0..3).map(|i| aspect_sums[b][i] / n).collect();
        for (i, strategy) in ResizeStrategy::ALL.iter().enumerate() {
            rows.push(StrategyBucketRow {
                bucket: (edges[b], edges[b] + bucket_width),
                strategy: *strategy,
                sizes: counts[b],
                mean_aspect_distortion: means[i],
                mean_dim_distortion: dim_sums[b][i] / n,
                strictly_best: best[b][i],
            });
            totals[i] += best[b][i];
            if (0..3).all(|j| j == i || means[i] < means[j]) {
                lowest_aspect[i] += 1;
            }
        }
    }

    Ok(StrategyComparison {
        rows,
        strictly_best_totals: ResizeStrategy::ALL.iter().copied().zip(totals).collect(),
        lowest_mean_aspect_buckets: ResizeStrategy::ALL.iter().copied().zip(lowest_aspect).collect(),
    })
}

/// Intersection-over-union of two valid boxes. Disjoint boxes score 0.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let ix = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let iy = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    let intersection = ix * iy;
    let union = a.area() + b.area() - intersection;
    if union <= 0.0 {
        return 0.0;
    }
    intersection / union
}

/// Scales a box by independent per-axis factors.
pub fn scale_box(b: &BBox, sx: f64, sy: f64) -> Result<BBox, GeometryError> {
    if !(sx.is_finite() && sy.is_finite() && sx > 0.0 && sy > 0.0) {
        return Err(GeometryError::NonPositiveScale(sx, sy));
    }
    Ok(BBox::new(b.x_min * sx, b.y_min * sy, b.x_max * sx, b.y_max * sy))
}
