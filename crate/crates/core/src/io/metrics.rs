//! Benchmark metrics and their CSV form.
//!
//! Columns, in order, are the fields of [`MetricsRecord`]. Floats are written
//! with the shortest representation that parses back to the same value.

use serde::Serialize;

use crate::codec::CompressionFlags;
use crate::geometry::Axis;
use crate::kdtree::{KdTree, POINT_BYTES};
use crate::search::SearchStats;

/// Static properties of a built tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TreeProfile {
    pub points: u64,
    pub leaves: u64,
    pub leaves_compressed: u64,
    /// Leaves with the flag of each axis set.
    pub flag_leaves: [u64; 3],
    /// Leaves with the x or y flag set.
    pub leaves_xy: u64,
    /// Leaves with any flag set.
    pub leaves_any: u64,
    pub arena_bytes: u64,
}

impl TreeProfile {
    pub fn of(tree: &KdTree) -> TreeProfile {
        let mut p = TreeProfile { points: tree.len() as u64, arena_bytes: tree.arena().len() as u64, ..Default::default() };
        for leaf in tree.leaves() {
            p.leaves += 1;
            if !leaf.compressed {
                continue;
            }
            p.leaves_compressed += 1;
            let flags = CompressionFlags::from_bits(tree.leaf_blob(leaf)[0]).unwrap_or(CompressionFlags::NONE);
            for axis in Axis::ALL {
                p.flag_leaves[axis.index()] += u64::from(flags.is_set(axis));
            }
            p.leaves_xy += u64::from(flags.is_set(Axis::X) || flags.is_set(Axis::Y));
            p.leaves_any += u64::from(flags.any());
        }
        p
    }

    pub fn flag_frequency(&self, axis: Axis) -> f64 {
        ratio(self.flag_leaves[axis.index()], self.leaves)
    }

    pub fn xy_frequency(&self) -> f64 {
        ratio(self.leaves_xy, self.leaves)
    }

    pub fn any_frequency(&self) -> f64 {
        ratio(self.leaves_any, self.leaves)
    }

    /// Leaf storage relative to twelve bytes per point.
    pub fn compression_ratio(&self) -> f64 {
        ratio(self.arena_bytes, self.points * POINT_BYTES as u64)
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// One row: the totals of a batch of queries over one frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub frame: String,
    pub radius: f32,
    pub queries: u64,
    pub points: u64,
    pub leaves: u64,
    pub leaves_visited: u64,
    pub points_classified: u64,
    pub inconclusive: u64,
    pub fallback_recomputations: u64,
    pub bytes_compressed: u64,
    pub bytes_baseline_equivalent: u64,
    pub bytes_ratio: f64,
    pub inconclusive_rate: f64,
    pub flag_x_freq: f64,
    pub flag_y_freq: f64,
    pub flag_z_freq: f64,
    pub flag_xy_freq: f64,
    pub flag_any_freq: f64,
    pub compression_ratio: f64,
}

pub const METRICS_COLUMNS: [&str; 19] = [
    "frame",
    "radius",
    "queries",
    "points",
    "leaves",
    "leaves_visited",
    "points_classified",
    "inconclusive",
    "fallback_recomputations",
    "bytes_compressed",
    "bytes_baseline_equivalent",
    "bytes_ratio",
    "inconclusive_rate",
    "flag_x_freq",
    "flag_y_freq",
    "flag_z_freq",
    "flag_xy_freq",
    "flag_any_freq",
    "compression_ratio",
];

impl MetricsRecord {
    pub fn new(frame: impl Into<String>, radius: f32, queries: u64, profile: &TreeProfile, stats: &SearchStats) -> Self {
        MetricsRecord {
            frame: frame.into(),
            radius,
            queries,
            points: profile.points,
            leaves: profile.leaves,
            leaves_visited: stats.leaves_visited,
            points_classified: stats.points_classified,
            inconclusive: stats.inconclusive_count,
            fallback_recomputations: stats.fallback_recomputations,
            bytes_compressed: stats.bytes_fetched_compressed,
            bytes_baseline_equivalent: stats.bytes_fetched_baseline_equivalent,
            bytes_ratio: stats.bytes_ratio(),
            inconclusive_rate: stats.inconclusive_rate(),
            flag_x_freq: profile.flag_frequency(Axis::X),
            flag_y_freq: profile.flag_frequency(Axis::Y),
            flag_z_freq: profile.flag_frequency(Axis::Z),
            flag_xy_freq: profile.xy_frequency(),
            flag_any_freq: profile.any_frequency(),
            compression_ratio: profile.compression_ratio(),
        }
    }
}

pub fn emit_metrics_csv(records: &[MetricsRecord]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(METRICS_COLUMNS).expect("writing to memory");
    for r in records {
        w.serialize(r).expect("writing to memory");
    }
    w.into_inner().expect("writing to memory")
}
