//! Euclidean cluster extraction.
//!
//! Clusters are the connected components of the graph linking every pair of
//! points within the tolerance radius, grown breadth-first from seeds taken in
//! index order. Components outside the size bounds are reported as noise.

use std::collections::VecDeque;

use thiserror::Error;

use crate::kdtree::KdTree;
use crate::search::{RadiusQuery, SearchError, SearchMode, SearchStats, Searcher, ShellConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClusterError {
    #[error("cluster size bounds must satisfy 1 <= min <= max, got {min}..={max}")]
    BadSizeBounds { min: usize, max: usize },
    #[error(transparent)]
    Search(#[from] SearchError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterParams {
    pub tolerance: f32,
    pub min_cluster_size: usize,
    pub max_cluster_size: usize,
}

impl ClusterParams {
    pub fn new(tolerance: f32, min_cluster_size: usize, max_cluster_size: usize) -> Result<Self, ClusterError> {
        if !(tolerance > 0.0 && tolerance.is_finite()) {
            return Err(SearchError::BadRadius(tolerance).into());
        }
        if min_cluster_size < 1 || min_cluster_size > max_cluster_size {
            return Err(ClusterError::BadSizeBounds { min: min_cluster_size, max: max_cluster_size });
        }
        Ok(ClusterParams { tolerance, min_cluster_size, max_cluster_size })
    }
}

/// Clusters ordered by their smallest index, each sorted ascending; `noise`
/// holds the points of rejected components, sorted.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClusterSet {
    pub clusters: Vec<Vec<u32>>,
    pub noise: Vec<u32>,
}

/// Grows clusters over `tree` using the given search mode. Also returns the
/// summed statistics of every radius search performed.
pub fn extract_clusters(tree: &KdTree, params: &ClusterParams, mode: SearchMode) -> (ClusterSet, SearchStats) {
    extract_clusters_with(&Searcher::new(tree), params, mode)
}

pub fn extract_clusters_with(searcher: &Searcher<'_>, params: &ClusterParams, mode: SearchMode) -> (ClusterSet, SearchStats) {
    let points = searcher.tree().points();
    let n = points.len();
    let mut visited = vec![false; n];
    let mut set = ClusterSet::default();
    let mut stats = SearchStats::default();
    let mut queue = VecDeque::new();

    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        visited[seed] = true;
        queue.push_back(seed as u32);
        let mut members = Vec::new();
        while let Some(i) = queue.pop_front() {
            members.push(i);
            let query = RadiusQuery::new(points[i as usize], params.tolerance)
                .expect("params and tree points are validated");
            let (neighbors, s) = searcher.search(mode, &query);
            stats += s;
            for j in neighbors {
                if !visited[j as usize] {
                    visited[j as usize] = true;
                    queue.push_back(j);
                }
            }
        }
        members.sort_unstable();
        if (params.min_cluster_size..=params.max_cluster_size).contains(&members.len()) {
            set.clusters.push(members);
        } else {
            set.noise.extend(members);
        }
    }
    set.noise.sort_unstable();
    (set, stats)
}

/// Convenience wrapper with an explicit shell configuration.
pub fn extract_clusters_config(
    tree: &KdTree,
    params: &ClusterParams,
    mode: SearchMode,
    config: ShellConfig,
) -> (ClusterSet, SearchStats) {
    extract_clusters_with(&Searcher::with_config(tree, config), params, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point3;
    use crate::kdtree::PointCloud;

    fn tree(points: Vec<Point3>) -> KdTree {
        KdTree::build(PointCloud::new("c", points), 15).unwrap()
    }

    #[test]
    fn two_separated_blobs() {
        let mut pts = Vec::new();
        for i in 0..20 {
            let f = i as f32 * 0.05;
            pts.push(Point3::new(10.0 + f, 2.0, -1.0));
            pts.push(Point3::new(-10.0 - f, 2.0, -1.0));
        }
        let t = tree(pts);
        let params = ClusterParams::new(0.2, 1, 1000).unwrap();
        for mode in [SearchMode::Baseline, SearchMode::Bonsai] {
            let (set, _) = extract_clusters(&t, &params, mode);
            assert_eq!(set.clusters.len(), 2);
            assert_eq!(set.clusters[0][0], 0);
            assert_eq!(set.clusters[1][0], 1);
            assert!(set.noise.is_empty());
        }
    }

    #[test]
    fn chain_is_transitive() {
        // Consecutive points 0.9 apart, radius 1: ends are far apart.
        let pts: Vec<Point3> = (0..30).map(|i| Point3::new(i as f32 * 0.9, 0.0, 0.0)).collect();
        let t = tree(pts);
        let params = ClusterParams::new(1.0, 1, 1000).unwrap();
        let (set, _) = extract_clusters(&t, &params, SearchMode::Bonsai);
        assert_eq!(set.clusters, vec![(0..30).collect::<Vec<u32>>()]);
    }

    #[test]
    fn size_filter_moves_to_noise() {
        let pts: Vec<Point3> = (0..10).map(|i| Point3::new(i as f32 * 0.1, 0.0, 0.0)).collect();
        let t = tree(pts);
        let params = ClusterParams::new(0.5, 11, 100).unwrap();
        let (set, _) = extract_clusters(&t, &params, SearchMode::Baseline);
        assert!(set.clusters.is_empty());
        assert_eq!(set.noise, (0..10).collect::<Vec<u32>>());
    }

    #[test]
    fn bad_params() {
        assert!(ClusterParams::new(0.0, 1, 2).is_err());
        assert!(ClusterParams::new(1.0, 0, 2).is_err());
        assert!(ClusterParams::new(1.0, 3, 2).is_err());
    }
}
