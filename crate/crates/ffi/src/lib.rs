//! C interface to kd-bonsai.
//!
//! Trees, search results and cluster sets are opaque handles created by
//! `bonsai_*` constructors and released with the matching `*_free`. Every
//! fallible call returns a [`BonsaiStatus`]; on failure a description is
//! available from [`bonsai_last_error_message`] on the same thread. Handles
//! are immutable after creation, so a tree may be searched from several
//! threads at once.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::{ptr, slice};

use kd_bonsai::clustering::{extract_clusters, ClusterParams};
use kd_bonsai::codec::{compress_leaf, decompress_leaf, LeafEncoding, MAX_LEAF_POINTS};
use kd_bonsai::geometry::{max_rounding_error, Point3};
use kd_bonsai::io::read_pcd_file;
use kd_bonsai::kdtree::{KdTree, PointCloud};
use kd_bonsai::search::{RadiusQuery, SearchMode, SearchStats, Searcher};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BonsaiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BuildFailed = 3,
    IoError = 4,
    CodecError = 5,
    BufferTooSmall = 6,
    Uncompressible = 7,
    Panic = 99,
}

/// Values accepted by the `mode` parameter of searches.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BonsaiMode {
    Baseline = 0,
    Compressed = 1,
}

/// Counters describing one search or a batch of searches.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BonsaiStats {
    pub leaves_visited: u64,
    pub points_classified: u64,
    pub inconclusive_count: u64,
    pub fallback_recomputations: u64,
    pub bytes_fetched_compressed: u64,
    pub bytes_fetched_baseline_equivalent: u64,
}

impl From<SearchStats> for BonsaiStats {
    fn from(s: SearchStats) -> Self {
        BonsaiStats {
            leaves_visited: s.leaves_visited,
            points_classified: s.points_classified,
            inconclusive_count: s.inconclusive_count,
            fallback_recomputations: s.fallback_recomputations,
            bytes_fetched_compressed: s.bytes_fetched_compressed,
            bytes_fetched_baseline_equivalent: s.bytes_fetched_baseline_equivalent,
        }
    }
}

pub struct BonsaiTree {
    tree: KdTree,
}

pub struct BonsaiResult {
    indices: Vec<u32>,
    stats: BonsaiStats,
}

pub struct BonsaiClusters {
    clusters: Vec<Vec<u32>>,
    noise: Vec<u32>,
    stats: BonsaiStats,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: impl Into<Vec<u8>>) {
    let mut bytes = msg.into();
    bytes.retain(|&b| b != 0);
    let msg = CString::new(bytes).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

struct Failure(BonsaiStatus, String);

impl Failure {
    fn new(status: BonsaiStatus, msg: impl ToString) -> Self {
        Failure(status, msg.to_string())
    }
}

/// Runs `f`, records any error or panic message, and maps it to a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> BonsaiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            BonsaiStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_last_error(format!("internal panic: {msg}"));
            BonsaiStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure::new(BonsaiStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

fn mode_from(mode: u32) -> Result<SearchMode, Failure> {
    match mode {
        0 => Ok(SearchMode::Baseline),
        1 => Ok(SearchMode::Bonsai),
        m => Err(Failure::new(BonsaiStatus::InvalidArgument, format!("unknown mode {m}"))),
    }
}

/// # Safety
/// `xyz` must point to `3 * n_points` floats unless `n_points` is zero.
unsafe fn points_from<'a>(xyz: *const f32, n_points: usize) -> Result<Vec<Point3>, Failure> {
    if n_points == 0 {
        return Ok(Vec::new());
    }
    non_null(xyz, "xyz")?;
    let len = n_points
        .checked_mul(3)
        .ok_or_else(|| Failure::new(BonsaiStatus::InvalidArgument, "point count overflows"))?;
    let flat: &'a [f32] = slice::from_raw_parts(xyz, len);
    Ok(flat.chunks_exact(3).map(|c| Point3::new(c[0], c[1], c[2])).collect())
}

fn build(points: Vec<Point3>, leaf_capacity: usize) -> Result<Box<BonsaiTree>, Failure> {
    let tree = KdTree::build(PointCloud::new("ffi", points), leaf_capacity)
        .map_err(|e| Failure::new(BonsaiStatus::BuildFailed, e))?;
    Ok(Box::new(BonsaiTree { tree }))
}

/// Builds a tree over `n_points` points stored as consecutive `x, y, z`
/// floats. The coordinates are copied. `leaf_capacity` is 1 to 16; pass 15
/// for the default layout.
///
/// # Safety
/// `xyz` must point to `3 * n_points` readable floats and `out` must be a
/// valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn bonsai_tree_build(
    xyz: *const f32,
    n_points: usize,
    leaf_capacity: usize,
    out: *mut *mut BonsaiTree,
) -> BonsaiStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let points = points_from(xyz, n_points)?;
        *out = Box::into_raw(build(points, leaf_capacity)?);
        Ok(())
    })
}

/// Builds a tree from a PCD file. Points with non-finite coordinates are
/// skipped; their number is stored in `dropped` when it is not null.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable; `dropped`
/// may be null.
#[no_mangle]
pub unsafe extern "C" fn bonsai_tree_from_pcd(
    path: *const c_char,
    leaf_capacity: usize,
    out: *mut *mut BonsaiTree,
    dropped: *mut usize,
) -> BonsaiStatus {
    guard(|| {
        non_null(out, "out")?;
        non_null(path, "path")?;
        *out = ptr::null_mut();
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Failure::new(BonsaiStatus::InvalidArgument, "path is not UTF-8"))?;
        let read = read_pcd_file(path).map_err(|e| Failure::new(BonsaiStatus::IoError, format!("{path}: {e}")))?;
        if !dropped.is_null() {
            *dropped = read.dropped;
        }
        *out = Box::into_raw(build(read.cloud.points, leaf_capacity)?);
        Ok(())
    })
}

/// # Safety
/// `tree` must be null or a handle from a `bonsai_tree_*` constructor that
/// has not been freed.
#[no_mangle]
pub unsafe extern "C" fn bonsai_tree_free(tree: *mut BonsaiTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Number of points, or 0 for a null handle.
///
/// # Safety
/// `tree` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bonsai_tree_len(tree: *const BonsaiTree) -> usize {
    tree.as_ref().map_or(0, |t| t.tree.len())
}

/// Number of leaves, or 0 for a null handle.
///
/// # Safety
/// `tree` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bonsai_tree_leaf_count(tree: *const BonsaiTree) -> usize {
    tree.as_ref().map_or(0, |t| t.tree.leaf_count())
}

/// Finds every point within `radius` of `(qx, qy, qz)`. Indices refer to
/// the order of the points given at build time and come back sorted. Both
/// modes return identical indices; they differ in the statistics.
///
/// # Safety
/// `tree` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bonsai_radius_search(
    tree: *const BonsaiTree,
    qx: f32,
    qy: f32,
    qz: f32,
    radius: f32,
    mode: u32,
    out: *mut *mut BonsaiResult,
) -> BonsaiStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        non_null(tree, "tree")?;
        let mode = mode_from(mode)?;
        let query = RadiusQuery::new(Point3::new(qx, qy, qz), radius)
            .map_err(|e| Failure::new(BonsaiStatus::InvalidArgument, e))?;
        let (indices, stats) = Searcher::new(&(*tree).tree).search(mode, &query);
        *out = Box::into_raw(Box::new(BonsaiResult { indices, stats: stats.into() }));
        Ok(())
    })
}

/// # Safety
/// `result` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn bonsai_result_len(result: *const BonsaiResult) -> usize {
    result.as_ref().map_or(0, |r| r.indices.len())
}

/// Pointer to `bonsai_result_len(result)` sorted indices, valid until the
/// result is freed. Null for a null handle.
///
/// # Safety
/// `result` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn bonsai_result_indices(result: *const BonsaiResult) -> *const u32 {
    result.as_ref().map_or(ptr::null(), |r| r.indices.as_ptr())
}

/// # Safety
/// `result` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bonsai_result_stats(result: *const BonsaiResult, out: *mut BonsaiStats) -> BonsaiStatus {
    guard(|| {
        non_null(result, "result")?;
        non_null(out, "out")?;
        *out = (*result).stats;
        Ok(())
    })
}

/// # Safety
/// `result` must be null or a result handle that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn bonsai_result_free(result: *mut BonsaiResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Groups points into clusters of neighbors within `tolerance`, keeping
/// clusters whose size lies in `[min_size, max_size]`.
///
/// # Safety
/// `tree` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bonsai_extract_clusters(
    tree: *const BonsaiTree,
    tolerance: f32,
    min_size: usize,
    max_size: usize,
    mode: u32,
    out: *mut *mut BonsaiClusters,
) -> BonsaiStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = ptr::null_mut();
        non_null(tree, "tree")?;
        let mode = mode_from(mode)?;
        let params = ClusterParams::new(tolerance, min_size, max_size)
            .map_err(|e| Failure::new(BonsaiStatus::InvalidArgument, e))?;
        let (set, stats) = extract_clusters(&(*tree).tree, &params, mode);
        *out = Box::into_raw(Box::new(BonsaiClusters { clusters: set.clusters, noise: set.noise, stats: stats.into() }));
        Ok(())
    })
}

/// # Safety
/// `clusters` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bonsai_clusters_count(clusters: *const BonsaiClusters) -> usize {
    clusters.as_ref().map_or(0, |c| c.clusters.len())
}

/// Size of cluster `k`, or 0 when `k` is out of range.
///
/// # Safety
/// `clusters` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bonsai_cluster_len(clusters: *const BonsaiClusters, k: usize) -> usize {
    clusters.as_ref().and_then(|c| c.clusters.get(k)).map_or(0, Vec::len)
}

/// Sorted member indices of cluster `k`, or null when `k` is out of range.
///
/// # Safety
/// `clusters` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bonsai_cluster_indices(clusters: *const BonsaiClusters, k: usize) -> *const u32 {
    clusters.as_ref().and_then(|c| c.clusters.get(k)).map_or(ptr::null(), |v| v.as_ptr())
}

/// # Safety
/// `clusters` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bonsai_clusters_noise_len(clusters: *const BonsaiClusters) -> usize {
    clusters.as_ref().map_or(0, |c| c.noise.len())
}

/// # Safety
/// `clusters` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bonsai_clusters_stats(clusters: *const BonsaiClusters, out: *mut BonsaiStats) -> BonsaiStatus {
    guard(|| {
        non_null(clusters, "clusters")?;
        non_null(out, "out")?;
        *out = (*clusters).stats;
        Ok(())
    })
}

/// # Safety
/// `clusters` must be null or a handle that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn bonsai_clusters_free(clusters: *mut BonsaiClusters) {
    if !clusters.is_null() {
        drop(Box::from_raw(clusters));
    }
}

/// Encodes up to 16 points as a compressed leaf blob. `written` receives
/// the blob length, or the required capacity when the status is
/// `BONSAI_STATUS_BUFFER_TOO_SMALL`. Points that do not fit in half
/// precision give `BONSAI_STATUS_UNCOMPRESSIBLE`.
///
/// # Safety
/// `xyz` must hold `3 * n_points` floats, `out` must have room for
/// `capacity` bytes and `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bonsai_compress_leaf(
    xyz: *const f32,
    n_points: usize,
    out: *mut u8,
    capacity: usize,
    written: *mut usize,
) -> BonsaiStatus {
    guard(|| {
        non_null(written, "written")?;
        *written = 0;
        if n_points == 0 || n_points > MAX_LEAF_POINTS {
            return Err(Failure::new(BonsaiStatus::InvalidArgument, format!("leaf must hold 1 to {MAX_LEAF_POINTS} points")));
        }
        let points = points_from(xyz, n_points)?;
        let blob = match compress_leaf(&points).map_err(|e| Failure::new(BonsaiStatus::CodecError, e))? {
            LeafEncoding::Compressed(blob) => blob,
            LeafEncoding::Uncompressible => {
                return Err(Failure::new(BonsaiStatus::Uncompressible, "a coordinate exceeds the half-precision range"))
            }
        };
        *written = blob.len();
        if capacity < blob.len() {
            return Err(Failure::new(BonsaiStatus::BufferTooSmall, format!("blob needs {} bytes", blob.len())));
        }
        non_null(out, "out")?;
        ptr::copy_nonoverlapping(blob.as_bytes().as_ptr(), out, blob.len());
        Ok(())
    })
}

/// Decodes a blob holding `n_points` points into `3 * n_points` floats,
/// widened exactly from half precision.
///
/// # Safety
/// `blob` must hold `blob_len` bytes and `out_xyz` room for `3 * n_points`
/// floats.
#[no_mangle]
pub unsafe extern "C" fn bonsai_decompress_leaf(
    blob: *const u8,
    blob_len: usize,
    n_points: usize,
    out_xyz: *mut f32,
) -> BonsaiStatus {
    guard(|| {
        non_null(blob, "blob")?;
        non_null(out_xyz, "out_xyz")?;
        let bytes = slice::from_raw_parts(blob, blob_len);
        let leaf = decompress_leaf(bytes, n_points).map_err(|e| Failure::new(BonsaiStatus::CodecError, e))?;
        let out = slice::from_raw_parts_mut(out_xyz, 3 * leaf.len());
        for (i, c) in out.chunks_exact_mut(3).enumerate() {
            c.copy_from_slice(&leaf.point_f32(i).coords());
        }
        Ok(())
    })
}

/// Largest rounding error of a value whose half-precision exponent field
/// is `exponent` (0 to 30).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bonsai_max_rounding_error(exponent: u32, out: *mut f32) -> BonsaiStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = max_rounding_error(exponent).map_err(|e| Failure::new(BonsaiStatus::InvalidArgument, e))?;
        Ok(())
    })
}

/// Message for the last failed call on this thread, or an empty string.
/// The pointer stays valid until the next `bonsai_*` call on this thread.
#[no_mangle]
pub extern "C" fn bonsai_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}
