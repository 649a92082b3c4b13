#ifndef KD_BONSAI_H
#define KD_BONSAI_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BonsaiStatus {
  BONSAI_STATUS_OK = 0,
  BONSAI_STATUS_NULL_POINTER = 1,
  BONSAI_STATUS_INVALID_ARGUMENT = 2,
  BONSAI_STATUS_BUILD_FAILED = 3,
  BONSAI_STATUS_IO_ERROR = 4,
  BONSAI_STATUS_CODEC_ERROR = 5,
  BONSAI_STATUS_BUFFER_TOO_SMALL = 6,
  BONSAI_STATUS_UNCOMPRESSIBLE = 7,
  BONSAI_STATUS_PANIC = 99,
} BonsaiStatus;

/*
 Values accepted by the `mode` parameter of searches.
 */
typedef enum BonsaiMode {
  BONSAI_MODE_BASELINE = 0,
  BONSAI_MODE_COMPRESSED = 1,
} BonsaiMode;

typedef struct BonsaiClusters BonsaiClusters;

typedef struct BonsaiResult BonsaiResult;

typedef struct BonsaiTree BonsaiTree;

/*
 Counters describing one search or a batch of searches.
 */
typedef struct BonsaiStats {
  uint64_t leaves_visited;
  uint64_t points_classified;
  uint64_t inconclusive_count;
  uint64_t fallback_recomputations;
  uint64_t bytes_fetched_compressed;
  uint64_t bytes_fetched_baseline_equivalent;
} BonsaiStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Builds a tree over `n_points` points stored as consecutive `x, y, z`
 floats. The coordinates are copied. `leaf_capacity` is 1 to 16; pass 15
 for the default layout.

 # Safety
 `xyz` must point to `3 * n_points` readable floats and `out` must be a
 valid pointer to write the handle to.
 */
enum BonsaiStatus bonsai_tree_build(const float *xyz,
                                    size_t n_points,
                                    size_t leaf_capacity,
                                    struct BonsaiTree **out);

/*
 Builds a tree from a PCD file. Points with non-finite coordinates are
 skipped; their number is stored in `dropped` when it is not null.

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable; `dropped`
 may be null.
 */
enum BonsaiStatus bonsai_tree_from_pcd(const char *path,
                                       size_t leaf_capacity,
                                       struct BonsaiTree **out,
                                       size_t *dropped);

/*
 # Safety
 `tree` must be null or a handle from a `bonsai_tree_*` constructor that
 has not been freed.
 */
void bonsai_tree_free(struct BonsaiTree *tree);

/*
 Number of points, or 0 for a null handle.

 # Safety
 `tree` must be null or a live handle.
 */
size_t bonsai_tree_len(const struct BonsaiTree *tree);

/*
 Number of leaves, or 0 for a null handle.

 # Safety
 `tree` must be null or a live handle.
 */
size_t bonsai_tree_leaf_count(const struct BonsaiTree *tree);

/*
 Finds every point within `radius` of `(qx, qy, qz)`. Indices refer to
 the order of the points given at build time and come back sorted. Both
 modes return identical indices; they differ in the statistics.

 # Safety
 `tree` must be a live handle and `out` writable.
 */
enum BonsaiStatus bonsai_radius_search(const struct BonsaiTree *tree,
                                       float qx,
                                       float qy,
                                       float qz,
                                       float radius,
                                       uint32_t mode,
                                       struct BonsaiResult **out);

/*
 # Safety
 `result` must be null or a live result handle.
 */
size_t bonsai_result_len(const struct BonsaiResult *result);

/*
 Pointer to `bonsai_result_len(result)` sorted indices, valid until the
 result is freed. Null for a null handle.

 # Safety
 `result` must be null or a live result handle.
 */
const uint32_t *bonsai_result_indices(const struct BonsaiResult *result);

/*
 # Safety
 `result` must be a live handle and `out` writable.
 */
enum BonsaiStatus bonsai_result_stats(const struct BonsaiResult *result, struct BonsaiStats *out);

/*
 # Safety
 `result` must be null or a result handle that has not been freed.
 */
void bonsai_result_free(struct BonsaiResult *result);

/*
 Groups points into clusters of neighbors within `tolerance`, keeping
 clusters whose size lies in `[min_size, max_size]`.

 # Safety
 `tree` must be a live handle and `out` writable.
 */
enum BonsaiStatus bonsai_extract_clusters(const struct BonsaiTree *tree,
                                          float tolerance,
                                          size_t min_size,
                                          size_t max_size,
                                          uint32_t mode,
                                          struct BonsaiClusters **out);

/*
 # Safety
 `clusters` must be null or a live handle.
 */
size_t bonsai_clusters_count(const struct BonsaiClusters *clusters);

/*
 Size of cluster `k`, or 0 when `k` is out of range.

 # Safety
 `clusters` must be null or a live handle.
 */
size_t bonsai_cluster_len(const struct BonsaiClusters *clusters, size_t k);

/*
 Sorted member indices of cluster `k`, or null when `k` is out of range.

 # Safety
 `clusters` must be null or a live handle.
 */
const uint32_t *bonsai_cluster_indices(const struct BonsaiClusters *clusters, size_t k);

/*
 # Safety
 `clusters` must be null or a live handle.
 */
size_t bonsai_clusters_noise_len(const struct BonsaiClusters *clusters);

/*
 # Safety
 `clusters` must be a live handle and `out` writable.
 */
enum BonsaiStatus bonsai_clusters_stats(const struct BonsaiClusters *clusters,
                                        struct BonsaiStats *out);

/*
 # Safety
 `clusters` must be null or a handle that has not been freed.
 */
void bonsai_clusters_free(struct BonsaiClusters *clusters);

/*
 Encodes up to 16 points as a compressed leaf blob. `written` receives
 the blob length, or the required capacity when the status is
 `BONSAI_STATUS_BUFFER_TOO_SMALL`. Points that do not fit in half
 precision give `BONSAI_STATUS_UNCOMPRESSIBLE`.

 # Safety
 `xyz` must hold `3 * n_points` floats, `out` must have room for
 `capacity` bytes and `written` must be writable.
 */
enum BonsaiStatus bonsai_compress_leaf(const float *xyz,
                                       size_t n_points,
                                       uint8_t *out,
                                       size_t capacity,
                                       size_t *written);

/*
 Decodes a blob holding `n_points` points into `3 * n_points` floats,
 widened exactly from half precision.

 # Safety
 `blob` must hold `blob_len` bytes and `out_xyz` room for `3 * n_points`
 floats.
 */
enum BonsaiStatus bonsai_decompress_leaf(const uint8_t *blob,
                                         size_t blob_len,
                                         size_t n_points,
                                         float *out_xyz);

/*
 Largest rounding error of a value whose half-precision exponent field
 is `exponent` (0 to 30).

 # Safety
 `out` must be writable.
 */
enum BonsaiStatus bonsai_max_rounding_error(uint32_t exponent, float *out);

/*
 Message for the last failed call on this thread, or an empty string.
 The pointer stays valid until the next `bonsai_*` call on this thread.
 */
const char *bonsai_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KD_BONSAI_H */
