#ifndef RGBD_FACEKIT_H
#define RGBD_FACEKIT_H

/* Generated by cbindgen from rgbd-facekit-capi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Call outcome.
 */
typedef enum FkStatus {
  FK_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  FK_STATUS_NULL_ARGUMENT = 1,
  /**
   * An argument was out of range or inconsistent.
   */
  FK_STATUS_INVALID_ARGUMENT = 2,
  /**
   * File could not be read or written.
   */
  FK_STATUS_IO = 3,
  /**
   * File or buffer contents were malformed.
   */
  FK_STATUS_DATA = 4,
  /**
   * The reprojected face mask was empty.
   */
  FK_STATUS_NO_DEPTH_SUPPORT = 5,
} FkStatus;

/**
 * Trained one-vs-rest model handle.
 */
typedef struct FkModel FkModel;

/**
 * Pixel rectangle.
 */
typedef struct FkRect {
  int32_t x;
  int32_t y;
  uint32_t w;
  uint32_t h;
} FkRect;

/**
 * Pinhole calibration for the depth/color camera pair; translation in
 * millimeters, rotation assumed identity.
 */
typedef struct FkCalibration {
  double depth_fx;
  double depth_fy;
  double depth_cx;
  double depth_cy;
  double color_fx;
  double color_fy;
  double color_cx;
  double color_cy;
  double t_x;
  double t_y;
  double t_z;
} FkCalibration;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *fk_last_error(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *fk_version(void);

/**
 * Feature vector length for a histogram grid (256 bins per cell).
 */
uintptr_t fk_feature_length(uint32_t grid_x, uint32_t grid_y);

/**
 * LBP code of a 3x3 window given as 9 row-major samples, or -1 when
 * `window` is null.
 *
 * # Safety
 * `window` must point to at least 9 readable `uint16_t` values.
 */
int32_t fk_lbp_code(const uint16_t *window);

/**
 * Extracts the block-LBP feature vector of an 8-bit gray ROI.
 * `workers` = 0 selects the serial engine; any positive count produces
 * bit-identical output. `out` must hold
 * `fk_feature_length(grid_x, grid_y)` doubles.
 *
 * # Safety
 * `data` must point to `width * height` readable bytes and `out` to
 * `out_len` writable doubles.
 */
enum FkStatus fk_extract_gray(const uint8_t *data,
                              uint32_t width,
                              uint32_t height,
                              uint32_t grid_x,
                              uint32_t grid_y,
                              uint32_t workers,
                              double *out,
                              uintptr_t out_len);

/**
 * Depth variant of `fk_extract_gray` over 16-bit millimeter samples.
 *
 * # Safety
 * `data` must point to `width * height` readable `uint16_t` values and
 * `out` to `out_len` writable doubles.
 */
enum FkStatus fk_extract_depth(const uint16_t *data,
                               uint32_t width,
                               uint32_t height,
                               uint32_t grid_x,
                               uint32_t grid_y,
                               uint32_t workers,
                               double *out,
                               uintptr_t out_len);

/**
 * Maps a color-space face rect to its depth-space bounding rect via
 * mask reprojection under the pinhole calibration.
 *
 * # Safety
 * `depth` must point to `depth_width * depth_height` readable
 * `uint16_t` values; `cal` and `out` must be valid pointers.
 */
enum FkStatus fk_face_depth_roi(struct FkRect rect,
                                uint32_t color_width,
                                uint32_t color_height,
                                const uint16_t *depth,
                                uint32_t depth_width,
                                uint32_t depth_height,
                                const struct FkCalibration *cal,
                                struct FkRect *out);

/**
 * Loads a model file into a fresh handle. The handle must be released
 * with `fk_model_free`.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` a valid pointer.
 */
enum FkStatus fk_model_load(const char *path, struct FkModel **out);

/**
 * Releases a model handle. Null is accepted and ignored.
 *
 * # Safety
 * `model` must be null or a pointer returned by `fk_model_load` that
 * has not been freed yet.
 */
void fk_model_free(struct FkModel *model);

/**
 * Feature length the model was trained with, or 0 for null.
 *
 * # Safety
 * `model` must be null or a live handle from `fk_model_load`.
 */
uintptr_t fk_model_feature_length(const struct FkModel *model);

/**
 * Number of identity labels in the model, or 0 for null.
 *
 * # Safety
 * `model` must be null or a live handle from `fk_model_load`.
 */
uintptr_t fk_model_label_count(const struct FkModel *model);

/**
 * Copies the label at `index` into `buf` as a nul-terminated string.
 *
 * # Safety
 * `buf` must point to `buf_len` writable bytes.
 */
enum FkStatus fk_model_label(const struct FkModel *model,
                             uintptr_t index,
                             char *buf,
                             uintptr_t buf_len);

/**
 * Predicts the best-scoring identity for a feature vector.
 * `out_label_index` receives the index usable with `fk_model_label`,
 * or -1 when the best score falls below `reject_threshold` (pass
 * -INFINITY to disable rejection). `out_score` receives the best score
 * either way.
 *
 * # Safety
 * `features` must point to `len` readable doubles; the out pointers
 * must be valid.
 */
enum FkStatus fk_model_predict(const struct FkModel *model,
                               const double *features,
                               uintptr_t len,
                               double reject_threshold,
                               int64_t *out_label_index,
                               double *out_score);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RGBD_FACEKIT_H */
