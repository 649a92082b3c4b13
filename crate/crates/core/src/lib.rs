//! Radius search over k-d trees whose leaves hold half-precision,
//! sign/exponent-compressed coordinates, with results identical to a plain
//! single-precision search.
//!
//! ```
//! use kd_bonsai::{KdTree, Point3, PointCloud, Searcher, RadiusQuery, SearchMode};
//!
//! let points = (0..100).map(|i| Point3::new(i as f32 * 0.1, 1.0, 2.0)).collect();
//! let tree = KdTree::build(PointCloud::new("line", points), 15).unwrap();
//! let query = RadiusQuery::new(Point3::new(5.0, 1.0, 2.0), 0.25).unwrap();
//! let searcher = Searcher::new(&tree);
//! let (exact, _) = searcher.search(SearchMode::Baseline, &query);
//! let (bonsai, stats) = searcher.search(SearchMode::Bonsai, &query);
//! assert_eq!(exact, bonsai);
//! assert!(stats.bytes_ratio() < 1.0);
//! ```

pub mod cli;
pub mod clustering;
pub mod codec;
pub mod geometry;
pub mod io;
pub mod kdtree;
pub mod search;

pub use clustering::{extract_clusters, ClusterError, ClusterParams, ClusterSet};
pub use codec::{
    blob_size, compress_leaf, decompress_leaf, CodecError, CompressedLeafBlob, CompressionFlags, HalfLeafPoints,
    LeafEncoding,
};
pub use geometry::{max_rounding_error, Axis, ErrorTable, FormatError, HalfValue, Point3, ReducedFormat};
pub use kdtree::{BuildError, KdTree, LeafNode, Node, PointCloud, DEFAULT_LEAF_CAPACITY};
pub use search::{
    classify, misclassification_study, radius_search_baseline, radius_search_bonsai, MisclassificationReport,
    RadiusQuery, SearchError, SearchMode, SearchStats, Searcher, ShellConfig, Verdict,
};
