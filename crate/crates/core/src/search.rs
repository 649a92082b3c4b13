//! Radius search.
//!
//! Two modes share one traversal:
//!
//! * **baseline** classifies every visited point with the single-precision
//!   squared distance, `d² ≤ r²`;
//! * **bonsai** decompresses each visited leaf to half precision and computes
//!   an approximate squared distance `d'²` together with a worst-case error
//!   `Tε`. Points with `d'²` outside the shell `[r² − W, r² + W]` are decided
//!   directly; points inside it are re-classified from their original
//!   single-precision coordinates. The shell half-width `W` is `Tε` scaled by
//!   a safety factor plus a small term proportional to `r²` that absorbs the
//!   rounding of the single-precision arithmetic itself.
//!
//! With the default [`ShellConfig`] both modes return identical index sets.

use std::ops::AddAssign;

use serde::Serialize;
use thiserror::Error;

use crate::codec::{self, LeafLanes, MAX_LEAF_POINTS};
use crate::geometry::{Axis, ErrorTable, FormatError, HalfValue, Point3, ReducedFormat};
use crate::kdtree::{KdTree, LeafNode, POINT_BYTES};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error("radius must be positive and finite, got {0}")]
    BadRadius(f32),
    #[error("query point is not finite")]
    NonFiniteQuery,
}

/// Query point and radius, with `r²` precomputed in single precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusQuery {
    q: Point3,
    r: f32,
    r2: f32,
}

impl RadiusQuery {
    pub fn new(q: Point3, r: f32) -> Result<Self, SearchError> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(SearchError::BadRadius(r));
        }
        if !q.is_finite() {
            return Err(SearchError::NonFiniteQuery);
        }
        Ok(RadiusQuery { q, r, r2: r * r })
    }

    pub fn point(&self) -> &Point3 {
        &self.q
    }

    pub fn radius(&self) -> f32 {
        self.r
    }

    pub fn radius_sq(&self) -> f32 {
        self.r2
    }

    /// Full-precision membership test.
    #[inline]
    pub fn contains(&self, p: &Point3) -> bool {
        self.q.dist2(p) <= self.r2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Verdict {
    In,
    Out,
    Inconclusive,
}

/// Approximate squared distance, its accumulated error bound and the shell
/// verdict it produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifiedDistance {
    pub d2_approx: f32,
    pub total_error: f32,
    pub verdict: Verdict,
}

/// Final decision for one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub inside: bool,
    /// The original point had to be fetched.
    pub fallback: bool,
    pub distance: ClassifiedDistance,
}

/// Shell sizing and fallback policy for bonsai classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellConfig {
    /// Multiplies the accumulated conversion error `Tε`.
    pub safety_factor: f32,
    /// Added to the shell half-width as a multiple of `r²`.
    pub arithmetic_slack: f32,
    /// When false, inconclusive points are decided by `d'² ≤ r²` without
    /// fetching the original. Only for demonstrating why the fallback is
    /// needed; results then differ from the baseline.
    pub fallback: bool,
}

impl ShellConfig {
    pub const DEFAULT_SAFETY_FACTOR: f32 = 1.0 + 1.0 / 262_144.0;
    pub const DEFAULT_ARITHMETIC_SLACK: f32 = 1.0 / 262_144.0;

    pub fn with_safety_factor(self, safety_factor: f32) -> Self {
        ShellConfig { safety_factor, ..self }
    }

    pub fn without_fallback(self) -> Self {
        ShellConfig { fallback: false, ..self }
    }

    /// Shell half-width for a given `Tε` and `r²`.
    #[inline]
    pub fn half_width(&self, total_error: f32, r2: f32) -> f32 {
        total_error * self.safety_factor + r2 * self.arithmetic_slack + f32::MIN_POSITIVE
    }
}

impl Default for ShellConfig {
    fn default() -> Self {
        ShellConfig {
            safety_factor: Self::DEFAULT_SAFETY_FACTOR,
            arithmetic_slack: Self::DEFAULT_ARITHMETIC_SLACK,
            fallback: true,
        }
    }
}

/// Squared difference between a single-precision `a` and a half-precision
/// `b`, plus the worst-case error that the rounding of `b` introduced:
/// `2·max(δ)·|a − b| + max(δ)²`, with both table terms looked up by the
/// exponent of `b`.
#[inline]
pub fn sq_diff_with_error(a: f32, b: HalfValue, table: &ErrorTable) -> (f32, f32) {
    let diff = a - b.to_f32();
    let e = b.exponent_field();
    let err = table.two_delta(e) * diff.abs() + table.delta_sq(e);
    (diff * diff, err)
}

/// Four-lane squared difference with error over lanes 0..4 of an 8-wide
/// half vector.
#[inline]
pub fn sq_diff_with_error_low(a: f32, b: &[HalfValue; 8], table: &ErrorTable) -> ([f32; 4], [f32; 4]) {
    lanes4(a, [b[0], b[1], b[2], b[3]], table)
}

/// Same as [`sq_diff_with_error_low`] over lanes 4..8.
#[inline]
pub fn sq_diff_with_error_high(a: f32, b: &[HalfValue; 8], table: &ErrorTable) -> ([f32; 4], [f32; 4]) {
    lanes4(a, [b[4], b[5], b[6], b[7]], table)
}

#[inline]
fn lanes4(a: f32, b: [HalfValue; 4], table: &ErrorTable) -> ([f32; 4], [f32; 4]) {
    let mut sq = [0.0; 4];
    let mut err = [0.0; 4];
    for i in 0..4 {
        (sq[i], err[i]) = sq_diff_with_error(a, b[i], table);
    }
    (sq, err)
}

/// Shell test on an already accumulated distance and error.
#[inline]
pub fn shell_verdict(d2_approx: f32, total_error: f32, r2: f32, config: &ShellConfig) -> Verdict {
    let w = config.half_width(total_error, r2);
    if d2_approx <= r2 - w {
        Verdict::In
    } else if d2_approx > r2 + w {
        Verdict::Out
    } else {
        Verdict::Inconclusive
    }
}

/// Classifies one half-precision point, falling back to `original` when the
/// shell test is inconclusive.
pub fn classify(
    query: &RadiusQuery,
    p_half: [HalfValue; 3],
    original: &Point3,
    table: &ErrorTable,
    config: &ShellConfig,
) -> Classification {
    let q = query.point();
    let (sx, ex) = sq_diff_with_error(q.x, p_half[0], table);
    let (sy, ey) = sq_diff_with_error(q.y, p_half[1], table);
    let (sz, ez) = sq_diff_with_error(q.z, p_half[2], table);
    let distance = resolve(sx + sy + sz, ex + ey + ez, query.radius_sq(), config);
    decide(query, distance, original, config)
}

#[inline]
fn resolve(d2_approx: f32, total_error: f32, r2: f32, config: &ShellConfig) -> ClassifiedDistance {
    ClassifiedDistance {
        d2_approx,
        total_error,
        verdict: shell_verdict(d2_approx, total_error, r2, config),
    }
}

#[inline]
fn decide(query: &RadiusQuery, distance: ClassifiedDistance, original: &Point3, config: &ShellConfig) -> Classification {
    let (inside, fallback) = match distance.verdict {
        Verdict::In => (true, false),
        Verdict::Out => (false, false),
        Verdict::Inconclusive if config.fallback => (query.contains(original), true),
        Verdict::Inconclusive => (distance.d2_approx <= query.radius_sq(), false),
    };
    Classification { inside, fallback, distance }
}

/// Per-query counters. Counters from several queries can be summed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SearchStats {
    pub leaves_visited: u64,
    pub points_classified: u64,
    pub inconclusive_count: u64,
    pub fallback_recomputations: u64,
    pub bytes_fetched_compressed: u64,
    pub bytes_fetched_baseline_equivalent: u64,
}

impl SearchStats {
    /// Fetched bytes relative to an uncompressed tree.
    pub fn bytes_ratio(&self) -> f64 {
        if self.bytes_fetched_baseline_equivalent == 0 {
            return 0.0;
        }
        self.bytes_fetched_compressed as f64 / self.bytes_fetched_baseline_equivalent as f64
    }

    pub fn inconclusive_rate(&self) -> f64 {
        if self.points_classified == 0 {
            return 0.0;
        }
        self.inconclusive_count as f64 / self.points_classified as f64
    }
}

impl AddAssign for SearchStats {
    fn add_assign(&mut self, o: Self) {
        self.leaves_visited += o.leaves_visited;
        self.points_classified += o.points_classified;
        self.inconclusive_count += o.inconclusive_count;
        self.fallback_recomputations += o.fallback_recomputations;
        self.bytes_fetched_compressed += o.bytes_fetched_compressed;
        self.bytes_fetched_baseline_equivalent += o.bytes_fetched_baseline_equivalent;
    }
}

impl std::iter::Sum for SearchStats {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(SearchStats::default(), |mut acc, s| {
            acc += s;
            acc
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
pub enum SearchMode {
    Baseline,
    #[default]
    Bonsai,
}

impl std::str::FromStr for SearchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "baseline" => Ok(SearchMode::Baseline),
            "bonsai" => Ok(SearchMode::Bonsai),
            other => Err(format!("unknown mode '{other}', expected baseline or bonsai")),
        }
    }
}

/// Runs radius searches over one tree. Cheap to create; holds only borrowed
/// state plus the error table.
#[derive(Debug, Clone)]
pub struct Searcher<'t> {
    tree: &'t KdTree,
    table: ErrorTable,
    config: ShellConfig,
}

impl<'t> Searcher<'t> {
    pub fn new(tree: &'t KdTree) -> Self {
        Searcher::with_config(tree, ShellConfig::default())
    }

    pub fn with_config(tree: &'t KdTree, config: ShellConfig) -> Self {
        Searcher { tree, table: ErrorTable::half(), config }
    }

    pub fn tree(&self) -> &'t KdTree {
        self.tree
    }

    pub fn config(&self) -> &ShellConfig {
        &self.config
    }

    pub fn search(&self, mode: SearchMode, query: &RadiusQuery) -> (Vec<u32>, SearchStats) {
        match mode {
            SearchMode::Baseline => self.baseline(query),
            SearchMode::Bonsai => self.bonsai(query),
        }
    }

    /// Full-precision radius search. Returns sorted indices.
    pub fn baseline(&self, query: &RadiusQuery) -> (Vec<u32>, SearchStats) {
        let points = self.tree.points();
        let mut out = Vec::new();
        let mut stats = SearchStats::default();
        self.tree.for_each_leaf_within(query.point(), query.radius(), |leaf| {
            let bytes = leaf.count as u64 * POINT_BYTES as u64;
            stats.leaves_visited += 1;
            stats.points_classified += leaf.count as u64;
            stats.bytes_fetched_compressed += bytes;
            stats.bytes_fetched_baseline_equivalent += bytes;
            out.extend(
                self.tree
                    .leaf_indices(leaf)
                    .iter()
                    .filter(|&&i| query.contains(&points[i as usize])),
            );
        });
        out.sort_unstable();
        (out, stats)
    }

    /// Compressed-leaf radius search with exact fallback. Returns sorted
    /// indices.
    pub fn bonsai(&self, query: &RadiusQuery) -> (Vec<u32>, SearchStats) {
        let mut out = Vec::new();
        let mut stats = SearchStats::default();
        let mut lanes: LeafLanes = [[HalfValue::ZERO; MAX_LEAF_POINTS]; 3];
        self.tree.for_each_leaf_within(query.point(), query.radius(), |leaf| {
            self.visit_leaf(query, leaf, &mut lanes, &mut out, &mut stats);
        });
        out.sort_unstable();
        (out, stats)
    }

    fn visit_leaf(
        &self,
        query: &RadiusQuery,
        leaf: &LeafNode,
        lanes: &mut LeafLanes,
        out: &mut Vec<u32>,
        stats: &mut SearchStats,
    ) {
        let n = leaf.count as usize;
        let indices = self.tree.leaf_indices(leaf);
        let blob = self.tree.leaf_blob(leaf);
        stats.leaves_visited += 1;
        stats.points_classified += n as u64;
        stats.bytes_fetched_compressed += leaf.blob_len as u64;
        stats.bytes_fetched_baseline_equivalent += (n * POINT_BYTES) as u64;

        if !leaf.compressed {
            for (i, raw) in blob.chunks_exact(POINT_BYTES).enumerate() {
                let p = Point3::from_le_bytes(raw.try_into().expect("12-byte chunk"));
                if query.contains(&p) {
                    out.push(indices[i]);
                }
            }
            return;
        }

        codec::decompress_into(blob, n, lanes).expect("arena holds a valid blob");
        let (d2, err) = self.accumulate(query, lanes, n);
        let points = self.tree.points();
        for i in 0..n {
            let distance = resolve(d2[i], err[i], query.radius_sq(), &self.config);
            if distance.verdict == Verdict::Inconclusive {
                stats.inconclusive_count += 1;
            }
            let c = decide(query, distance, &points[indices[i] as usize], &self.config);
            if c.fallback {
                stats.fallback_recomputations += 1;
                stats.bytes_fetched_compressed += POINT_BYTES as u64;
            }
            if c.inside {
                out.push(indices[i]);
            }
        }
    }

    /// Coordinate-major accumulation of `d'²` and `Tε` over the leaf's
    /// lanes, eight values per coordinate register, four lanes at a time.
    fn accumulate(&self, query: &RadiusQuery, lanes: &LeafLanes, n: usize) -> ([f32; 16], [f32; 16]) {
        let mut sq = [[0f32; MAX_LEAF_POINTS]; 3];
        let mut err = [[0f32; MAX_LEAF_POINTS]; 3];
        let registers = n.div_ceil(8);
        for axis in Axis::ALL {
            let a = axis.index();
            let qa = query.point()[axis];
            for reg in 0..registers {
                let base = reg * 8;
                let v: &[HalfValue; 8] = lanes[a][base..base + 8].try_into().expect("8 lanes");
                let (s_lo, e_lo) = sq_diff_with_error_low(qa, v, &self.table);
                sq[a][base..base + 4].copy_from_slice(&s_lo);
                err[a][base..base + 4].copy_from_slice(&e_lo);
                if n > base + 4 {
                    let (s_hi, e_hi) = sq_diff_with_error_high(qa, v, &self.table);
                    sq[a][base + 4..base + 8].copy_from_slice(&s_hi);
                    err[a][base + 4..base + 8].copy_from_slice(&e_hi);
                }
            }
        }
        let mut d2 = [0f32; MAX_LEAF_POINTS];
        let mut total = [0f32; MAX_LEAF_POINTS];
        for i in 0..n {
            d2[i] = sq[0][i] + sq[1][i] + sq[2][i];
            total[i] = err[0][i] + err[1][i] + err[2][i];
        }
        (d2, total)
    }
}

pub fn radius_search_baseline(tree: &KdTree, q: Point3, r: f32) -> Result<Vec<u32>, SearchError> {
    let query = RadiusQuery::new(q, r)?;
    Ok(Searcher::new(tree).baseline(&query).0)
}

pub fn radius_search_bonsai(tree: &KdTree, q: Point3, r: f32) -> Result<(Vec<u32>, SearchStats), SearchError> {
    let query = RadiusQuery::new(q, r)?;
    Ok(Searcher::new(tree).bonsai(&query))
}

/// Outcome of classifying with reduced-precision points and no shell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MisclassificationReport {
    pub format: (u32, u32),
    pub classifications: u64,
    pub misclassified: u64,
}

impl MisclassificationReport {
    pub fn fraction(&self) -> f64 {
        if self.classifications == 0 {
            0.0
        } else {
            self.misclassified as f64 / self.classifications as f64
        }
    }
}

/// Counts how many of the point classifications a radius search performs
/// change verdict when the points are rounded to `format` and compared with
/// the plain `d² ≤ r²` test (no error shell, no fallback). Points the format
/// cannot represent count as misclassified.
pub fn misclassification_study(tree: &KdTree, queries: &[RadiusQuery], format: ReducedFormat) -> MisclassificationReport {
    let quantize = |v: f32| -> Result<f32, FormatError> { format.quantize(v) };
    let reduced: Vec<Option<Point3>> = tree
        .points()
        .iter()
        .map(|p| Some(Point3::new(quantize(p.x).ok()?, quantize(p.y).ok()?, quantize(p.z).ok()?)))
        .collect();
    let points = tree.points();
    let mut classifications = 0u64;
    let mut misclassified = 0u64;
    for query in queries {
        tree.for_each_leaf_within(query.point(), query.radius(), |leaf| {
            for &i in tree.leaf_indices(leaf) {
                classifications += 1;
                let exact = query.contains(&points[i as usize]);
                match &reduced[i as usize] {
                    Some(p) if query.contains(p) == exact => {}
                    _ => misclassified += 1,
                }
            }
        });
    }
    MisclassificationReport {
        format: (format.exponent_bits(), format.mantissa_bits()),
        classifications,
        misclassified,
    }
}
