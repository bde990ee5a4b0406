#ifndef PLANEDET_H
#define PLANEDET_H

/* Generated by cbindgen; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum PdStatus {
  PD_STATUS_OK = 0,
  PD_STATUS_NULL_POINTER = 1,
  PD_STATUS_INVALID_ARGUMENT = 2,
  PD_STATUS_PARSE_ERROR = 3,
  PD_STATUS_IO_ERROR = 4,
  PD_STATUS_DETECTION_FAILED = 5,
  PD_STATUS_OUT_OF_RANGE = 6,
  PD_STATUS_PANIC = 7,
} PdStatus;

typedef enum PdOrientation {
  PD_ORIENTATION_HORIZONTAL = 0,
  PD_ORIENTATION_VERTICAL = 1,
  PD_ORIENTATION_OTHER = 2,
} PdOrientation;

/**
 * Opaque point cloud.
 */
typedef struct PdCloud PdCloud;

/**
 * Opaque detection result.
 */
typedef struct PdDetection PdDetection;

/**
 * Parameters shared by both detectors: gravity direction, orientation
 * tolerance in degrees, merge thresholds, and RNG seed.
 */
typedef struct PdCommonParams {
  double up[3];
  double orientation_tolerance;
  double merge_angle;
  double merge_offset;
  uint64_t seed;
} PdCommonParams;

/**
 * One-point detector parameters. `sigma <= 0` selects the mean neighbor
 * distance.
 */
typedef struct PdOpsParams {
  double sampling_rate;
  size_t k;
  double sigma;
  double success_probability;
  double dist_threshold;
  size_t min_inliers;
  bool detect_first;
} PdOpsParams;

/**
 * Fast sampling detector parameters. `max_inlier_points == 0` means half
 * the cloud.
 */
typedef struct PdFspfParams {
  size_t max_inlier_points;
  size_t max_iterations;
  size_t local_samples;
  double min_inlier_fraction;
  double dist_threshold;
  double r1;
  double r2;
  bool claim_sphere;
} PdFspfParams;

typedef struct PdPlane {
  double centroid[3];
  double normal[3];
  size_t inlier_count;
  enum PdOrientation orientation;
} PdPlane;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Returns the message for the last failed call on this thread, or null.
 * The string stays valid until the next call into this library on the same
 * thread.
 */
const char *pd_last_error_message(void);

/**
 * Builds a cloud from `n` interleaved `x, y, z` triples.
 *
 * # Safety
 * `xyz` must point to `3 * n` readable doubles (or may be null when `n` is
 * zero); `out` must be a valid pointer to write the handle to.
 */
enum PdStatus pd_cloud_from_xyz(const double *xyz, size_t n, struct PdCloud **out);

/**
 * Loads a PLY or XYZ file. Non-finite points are dropped.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be a valid pointer.
 */
enum PdStatus pd_cloud_load(const char *path, struct PdCloud **out);

/**
 * # Safety
 * `cloud` must be null or a live handle from this library.
 */
size_t pd_cloud_len(const struct PdCloud *cloud);

/**
 * # Safety
 * `cloud` must be null or a handle not yet freed.
 */
void pd_cloud_free(struct PdCloud *cloud);

struct PdCommonParams pd_common_params_default(void);

struct PdOpsParams pd_ops_params_default(void);

struct PdFspfParams pd_fspf_params_default(void);

/**
 * Runs the one-point detector followed by merging.
 *
 * # Safety
 * `cloud` must be a live handle and `out` a valid pointer. `params` and
 * `common` may be null to use defaults.
 */
enum PdStatus pd_detect_ops(const struct PdCloud *cloud,
                            const struct PdOpsParams *params,
                            const struct PdCommonParams *common,
                            struct PdDetection **out);

/**
 * Runs the fast sampling detector followed by merging.
 *
 * # Safety
 * Same contract as [`pd_detect_ops`].
 */
enum PdStatus pd_detect_fspf(const struct PdCloud *cloud,
                             const struct PdFspfParams *params,
                             const struct PdCommonParams *common,
                             struct PdDetection **out);

/**
 * Number of planes after merging.
 *
 * # Safety
 * `det` must be null or a live handle.
 */
size_t pd_detection_plane_count(const struct PdDetection *det);

/**
 * Number of planes the detector reported before merging.
 *
 * # Safety
 * `det` must be null or a live handle.
 */
size_t pd_detection_pre_merge_count(const struct PdDetection *det);

/**
 * # Safety
 * `det` must be a live handle and `out` a valid pointer.
 */
enum PdStatus pd_detection_plane(const struct PdDetection *det, size_t index, struct PdPlane *out);

/**
 * Copies per-point labels into caller buffers of length `len`, which must
 * equal the cloud size. Unsegmented points get plane id -1. Either buffer
 * may be null to skip it.
 *
 * # Safety
 * Non-null buffers must have room for `len` elements.
 */
enum PdStatus pd_detection_labels(const struct PdDetection *det,
                                  int64_t *plane_ids,
                                  enum PdOrientation *orientations,
                                  size_t len);

/**
 * # Safety
 * `det` must be null or a handle not yet freed.
 */
void pd_detection_free(struct PdDetection *det);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PLANEDET_H */
