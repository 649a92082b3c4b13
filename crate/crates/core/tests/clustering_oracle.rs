mod common;

use common::brute_components;
use kd_bonsai::clustering::{extract_clusters, ClusterParams};
use kd_bonsai::geometry::Point3;
use kd_bonsai::kdtree::{KdTree, PointCloud};
use kd_bonsai::search::SearchMode;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn blobs(seed: u64, n: usize, centers: usize, spread: f32) -> Vec<Point3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cs: Vec<Point3> = (0..centers)
        .map(|_| Point3::new(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0), rng.random_range(-1.0..1.0)))
        .collect();
    (0..n)
        .map(|_| {
            let c = cs[rng.random_range(0..centers)];
            Point3::new(
                c.x + rng.random_range(-spread..spread),
                c.y + rng.random_range(-spread..spread),
                c.z + rng.random_range(-spread..spread),
            )
        })
        .collect()
}

#[test]
fn two_thousand_points_match_union_find() {
    let points = blobs(3, 2000, 12, 1.2);
    let r = 0.3;
    let expected = brute_components(&points, r);
    let tree = KdTree::build(PointCloud::new("c", points), 15).unwrap();
    let params = ClusterParams::new(r, 1, usize::MAX).unwrap();
    for mode in [SearchMode::Baseline, SearchMode::Bonsai] {
        let (set, _) = extract_clusters(&tree, &params, mode);
        assert_eq!(set.clusters, expected, "{mode:?}");
        assert!(set.noise.is_empty());
    }
}

#[test]
fn size_bounds_split_components_into_clusters_and_noise() {
    let points = blobs(8, 800, 30, 0.8);
    let r = 0.25;
    let comps = brute_components(&points, r);
    let tree = KdTree::build(PointCloud::new("c", points), 15).unwrap();
    let params = ClusterParams::new(r, 5, 40).unwrap();
    let (set, _) = extract_clusters(&tree, &params, SearchMode::Bonsai);
    let keep: Vec<Vec<u32>> = comps.iter().filter(|c| (5..=40).contains(&c.len())).cloned().collect();
    let mut noise: Vec<u32> = comps.iter().filter(|c| !(5..=40).contains(&c.len())).flatten().copied().collect();
    noise.sort_unstable();
    assert_eq!(set.clusters, keep);
    assert_eq!(set.noise, noise);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn modes_agree_with_oracle(seed in any::<u64>(), n in 1usize..400, centers in 1usize..8, r in 0.05f32..1.0) {
        let points = blobs(seed, n, centers, 1.5);
        let expected = brute_components(&points, r);
        let tree = KdTree::build(PointCloud::new("c", points), 15).unwrap();
        let params = ClusterParams::new(r, 1, usize::MAX).unwrap();
        let (base, _) = extract_clusters(&tree, &params, SearchMode::Baseline);
        let (bonsai, _) = extract_clusters(&tree, &params, SearchMode::Bonsai);
        prop_assert_eq!(&base.clusters, &expected);
        prop_assert_eq!(base, bonsai);
    }
}
