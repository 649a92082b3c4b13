//! One PASS/FAIL line per acceptance criterion. Exits nonzero if any fails.

mod common;

use std::process::{Command, ExitCode};

use common::{brute_components, error_bound_violations, golden_vectors, oracle_pack, payload, to_half};
use kd_bonsai::cli::{cmd_bench, cmd_table1, parse_args, Command as Sub, RunConfig};
use kd_bonsai::clustering::{extract_clusters, ClusterParams};
use kd_bonsai::codec::{compress_leaf, decompress_leaf, CompressedLeafBlob, CompressionFlags, HalfLeafPoints, LeafEncoding};
use kd_bonsai::geometry::{Axis, HalfValue, Point3};
use kd_bonsai::io::{generate_scene, SceneSpec, TreeProfile};
use kd_bonsai::kdtree::{KdTree, PointCloud};
use kd_bonsai::search::{RadiusQuery, SearchMode, Searcher};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: std::ops::RangeInclusive<u64> = 1..=5;
const RADII: &str = "0.2,0.5,1,2";
const QUERIES_PER_RADIUS: usize = 2500;
const BOUNDARY_ANCHORS: usize = 100;

const MAX_HALF_MISCLASSIFICATION: f64 = 0.01;
const FULL_LEAF_RATIO: (u64, u64) = (64, 180);
const MAX_MIXED_BYTES_RATIO: f64 = 0.55;
const MAX_INCONCLUSIVE_RATE: f64 = 0.02;
const MIN_SHARING: f64 = 0.70;
const CLUSTER_MAX_POINTS: usize = 2000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn config(args: &[&str]) -> RunConfig {
    let mut argv = vec!["kd-bonsai"];
    argv.extend_from_slice(args);
    match parse_args(argv).unwrap().command {
        Sub::Verify(c) | Sub::Bench(c) | Sub::Table1(c) => RunConfig::try_from(&c).unwrap(),
        _ => unreachable!(),
    }
}

fn exactness() -> Outcome {
    let mut sizes = Vec::new();
    for seed in SEEDS {
        sizes.push(generate_scene(&SceneSpec::default().with_seed(seed)).unwrap().len());
    }
    let sizes_ok = sizes.iter().all(|n| (10_000..=100_000).contains(n));

    let frames = SEEDS.count().to_string();
    let queries = QUERIES_PER_RADIUS.to_string();
    let anchors = BOUNDARY_ANCHORS.to_string();
    let run = |extra: &[&str]| {
        let mut args = vec!["verify", "--frames", &frames, "--radius", RADII, "--queries", &queries];
        args.extend_from_slice(&["--boundary-anchors", &anchors]);
        args.extend_from_slice(extra);
        Command::new(env!("CARGO_BIN_EXE_kd-bonsai")).args(&args).output().unwrap()
    };
    let verify = run(&[]);
    let line = String::from_utf8_lossy(&verify.stdout).lines().next().unwrap_or_default().to_string();
    let total: usize = line.split_whitespace().nth(1).and_then(|t| t.parse().ok()).unwrap_or(0);
    let per_frame = total / SEEDS.count();

    // The same corpus must break a search that trusts the approximate
    // distance, or it is not exercising the shell.
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("div.txt");
    let unsafe_run = run(&["--unsafe-disable-fallback", "--output", dump.to_str().unwrap()]);

    let pass = verify.status.success()
        && line.contains("divergences 0")
        && per_frame >= 10_000
        && sizes_ok
        && unsafe_run.status.code() == Some(1);
    outcome(
        pass,
        format!(
            "scenes {sizes:?}, {per_frame} queries per scene, `{line}`, without fallback exit {:?}",
            unsafe_run.status.code()
        ),
    )
}

fn error_bound() -> Outcome {
    let n = 1_000_000;
    let bad = error_bound_violations(n, 0xacce97);
    outcome(bad == 0, format!("{bad} violations over {n} pairs"))
}

fn table1() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for seed in SEEDS {
        let seed_arg = seed.to_string();
        let rows = cmd_table1(&config(&["table1", "--seed", &seed_arg, "--radius", RADII, "--queries", "500"])).unwrap();
        let f: Vec<f64> = rows.iter().map(|r| r.fraction()).collect();
        let (b32, half, bf16, c24) = (f[0], f[1], f[2], f[3]);
        pass &= b32 == 0.0 && half < MAX_HALF_MISCLASSIFICATION && half < bf16 && c24 < half;
        detail.push(format!("s{seed} {:.4}/{:.4}/{:.4}/{:.6}%", b32 * 100.0, half * 100.0, bf16 * 100.0, c24 * 100.0));
    }
    outcome(pass, format!("binary32/half/bfloat16/custom24: {}", detail.join(", ")))
}

/// 1920 points with distinct coordinates per axis in [8, 15.5), so every
/// leaf holds 15 points and every axis shares its sign and exponent.
fn full_leaf_tree() -> KdTree {
    let n = 15 * 128;
    let mut rng = ChaCha8Rng::seed_from_u64(64);
    let mut axes: [Vec<usize>; 3] = std::array::from_fn(|_| (0..n).collect());
    for a in &mut axes {
        a.shuffle(&mut rng);
    }
    let c = |i: usize| 8.0 + i as f32 / 256.0;
    let points = (0..n).map(|i| Point3::new(c(axes[0][i]), c(axes[1][i]), c(axes[2][i]))).collect();
    KdTree::build(PointCloud::new("full", points), 15).unwrap()
}

fn traffic_and_inconclusive() -> (Outcome, Outcome) {
    let tree = full_leaf_tree();
    let full = tree.leaves().all(|l| tree.leaf_indices(l).len() == 15 && l.compressed);
    let query = RadiusQuery::new(Point3::new(12.0, 12.0, 12.0), 100.0).unwrap();
    let (hits, stats) = Searcher::new(&tree).bonsai(&query);
    let (num, den) = FULL_LEAF_RATIO;
    let exact = full
        && hits.len() == tree.len()
        && stats.fallback_recomputations == 0
        && stats.bytes_fetched_compressed * den == stats.bytes_fetched_baseline_equivalent * num;

    let frames = SEEDS.count().to_string();
    let queries = QUERIES_PER_RADIUS.to_string();
    let records = cmd_bench(&config(&["bench", "--frames", &frames, "--radius", RADII, "--queries", &queries])).unwrap();
    let worst_bytes = records.iter().map(|r| r.bytes_ratio).fold(0.0, f64::max);
    let worst_inconclusive = records.iter().map(|r| r.inconclusive_rate).fold(0.0, f64::max);
    let traffic = outcome(
        exact && worst_bytes <= MAX_MIXED_BYTES_RATIO,
        format!(
            "full leaves {}/{} = {:.4} (want {num}/{den}), worst mixed scene {worst_bytes:.4} over {} runs",
            stats.bytes_fetched_compressed,
            stats.bytes_fetched_baseline_equivalent,
            stats.bytes_ratio(),
            records.len()
        ),
    );
    let inconclusive = outcome(
        !records.is_empty() && worst_inconclusive <= MAX_INCONCLUSIVE_RATE,
        format!("worst {:.4}% over {} (scene, radius) runs", worst_inconclusive * 100.0, records.len()),
    );
    (traffic, inconclusive)
}

fn sharing() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for seed in SEEDS {
        let cloud = generate_scene(&SceneSpec::default().with_seed(seed)).unwrap();
        let p = TreeProfile::of(&KdTree::build(cloud, 15).unwrap());
        pass &= p.any_frequency() >= MIN_SHARING && p.xy_frequency() >= MIN_SHARING;
        detail.push(format!("s{seed} any {:.3} xy {:.3}", p.any_frequency(), p.xy_frequency()));
    }
    outcome(pass, detail.join(", "))
}

fn codec() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0dec);
    let mut checked = 0;
    let mut failures = 0;
    for n in 1..=16usize {
        for pattern in 0..8u8 {
            let flags = [pattern & 1 != 0, pattern & 2 != 0, pattern & 4 != 0];
            let set = Axis::ALL.iter().fold(CompressionFlags::NONE, |f, &a| f.with(a, flags[a.index()]));
            for _ in 0..100 {
                let coords = payload(&mut rng, n, flags);
                let v = |a: usize| coords[a].iter().map(|&b| HalfValue::from_bits(b)).collect();
                let points = HalfLeafPoints::new(v(0), v(1), v(2)).unwrap();
                let blob = CompressedLeafBlob::pack(&points, set).unwrap();
                let decoded = decompress_leaf(blob.as_bytes(), n).unwrap();
                let values_ok = Axis::ALL
                    .iter()
                    .all(|&a| decoded.axis(a).iter().map(|h| h.to_bits()).eq(coords[a.index()].iter().copied()));
                let repacked = CompressedLeafBlob::pack(&decoded, blob.flags()).unwrap();
                if blob.as_bytes() != oracle_pack(&coords, flags) || !values_ok || repacked.as_bytes() != blob.as_bytes() {
                    failures += 1;
                }
                checked += 1;
            }
        }
    }
    let goldens = golden_vectors();
    let golden_bad = goldens
        .iter()
        .filter(|g| {
            let Ok(LeafEncoding::Compressed(blob)) = compress_leaf(&g.points) else { return true };
            let Ok(decoded) = decompress_leaf(&g.blob, g.points.len()) else { return true };
            blob.as_bytes() != g.blob.as_slice()
                || g.points.iter().enumerate().any(|(i, p)| {
                    decoded.point_f32(i).coords().map(f32::to_bits) != p.coords().map(|c| to_half(c).to_f32().to_bits())
                })
        })
        .count();
    outcome(
        failures == 0 && checked == 12_800 && golden_bad == 0,
        format!("{failures} failures in {checked} blobs, {golden_bad} of {} golden vectors differ", goldens.len()),
    )
}

fn blob_scene(seed: u64, n: usize) -> Vec<Point3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Point3> = (0..10)
        .map(|_| Point3::new(rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0), rng.random_range(0.0..2.0)))
        .collect();
    (0..n)
        .map(|_| {
            let c = centers[rng.random_range(0..centers.len())];
            Point3::new(c.x + rng.random_range(-1.5..1.5), c.y + rng.random_range(-1.5..1.5), c.z + rng.random_range(-0.5..0.5))
        })
        .collect()
}

fn clustering() -> Outcome {
    let mut scenes: Vec<(String, Vec<Point3>, f32)> = Vec::new();
    for seed in SEEDS {
        let spec = SceneSpec { n_objects: 6, ground_points: 300, ..SceneSpec::default().with_seed(seed) };
        let mut points = generate_scene(&spec).unwrap().points;
        points.truncate(CLUSTER_MAX_POINTS);
        scenes.push((format!("scene-{seed}"), points, 0.5));
        scenes.push((format!("blobs-{seed}"), blob_scene(seed, CLUSTER_MAX_POINTS), 0.3));
    }
    let mut bad = Vec::new();
    for (name, points, r) in &scenes {
        let expected = brute_components(points, *r);
        let tree = KdTree::build(PointCloud::new(name.clone(), points.clone()), 15).unwrap();
        let params = ClusterParams::new(*r, 1, usize::MAX).unwrap();
        let (base, _) = extract_clusters(&tree, &params, SearchMode::Baseline);
        let (bonsai, _) = extract_clusters(&tree, &params, SearchMode::Bonsai);
        if base.clusters != expected || base != bonsai {
            bad.push(name.clone());
        }
    }
    let sizes: Vec<usize> = scenes.iter().map(|s| s.1.len()).collect();
    outcome(bad.is_empty(), format!("{} scenes with N {sizes:?}, mismatches {bad:?}", scenes.len()))
}

fn main() -> ExitCode {
    let (traffic, inconclusive) = traffic_and_inconclusive();
    let results = [
        ("exactness", exactness()),
        ("error-bound", error_bound()),
        ("table1-orderings", table1()),
        ("traffic", traffic),
        ("inconclusive-rate", inconclusive),
        ("sharing-frequency", sharing()),
        ("codec", codec()),
        ("clustering-oracle", clustering()),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += !o.pass as usize;
    }
    println!("{} of {} criteria pass", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
