#ifndef TEXLAB_H
#define TEXLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TexlabStatus {
  TEXLAB_STATUS_OK = 0,
  TEXLAB_STATUS_NULL_POINTER = 1,
  TEXLAB_STATUS_FORMAT = 2,
  TEXLAB_STATUS_IO = 3,
  TEXLAB_STATUS_ARGUMENT = 4,
  TEXLAB_STATUS_TRAINING = 5,
  TEXLAB_STATUS_CONFIG = 6,
  TEXLAB_STATUS_BUFFER_TOO_SMALL = 7,
  TEXLAB_STATUS_PANIC = 8,
} TexlabStatus;

typedef enum TexlabAttribute {
  TEXLAB_ATTRIBUTE_AMPLITUDE = 0,
  TEXLAB_ATTRIBUTE_PYRAMID = 1,
  TEXLAB_ATTRIBUTE_DWT = 2,
  TEXLAB_ATTRIBUTE_GABOR = 3,
  TEXLAB_ATTRIBUTE_CURVELET = 4,
} TexlabAttribute;

/**
 * Opaque model handle.
 */
typedef struct TexlabModel TexlabModel;

/**
 * Opaque raster handle.
 */
typedef struct TexlabRaster TexlabRaster;

/**
 * Scalar scores of one prediction/reference comparison.
 */
typedef struct TexlabMetrics {
  double pixel_accuracy;
  double mean_iu;
  double frequency_weighted_iu;
} TexlabMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread. The pointer stays valid
 * until the next failing call on the same thread.
 */
const char *texlab_last_error(void);

/**
 * Creates a raster from `width * height` row-major values.
 *
 * # Safety
 * `data` must point to `width * height` doubles; `out` must be writable.
 */
enum TexlabStatus texlab_raster_new(size_t width,
                                    size_t height,
                                    const double *data,
                                    struct TexlabRaster **out);

/**
 * Reads a `.pgm` or `.sgrd` file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum TexlabStatus texlab_raster_read(const char *path, struct TexlabRaster **out);

/**
 * Writes a raster; the format follows the extension.
 *
 * # Safety
 * `raster` must come from this library; `path` must be NUL-terminated.
 */
enum TexlabStatus texlab_raster_write(const struct TexlabRaster *raster, const char *path);

/**
 * # Safety
 * `raster` must come from this library or be null.
 */
size_t texlab_raster_width(const struct TexlabRaster *raster);

/**
 * # Safety
 * `raster` must come from this library or be null.
 */
size_t texlab_raster_height(const struct TexlabRaster *raster);

/**
 * Copies the row-major values into `out`, which holds `len` doubles.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum TexlabStatus texlab_raster_copy_data(const struct TexlabRaster *raster,
                                          double *out,
                                          size_t len);

/**
 * # Safety
 * `raster` must come from this library and not be used afterwards.
 */
void texlab_raster_free(struct TexlabRaster *raster);

/**
 * Feature vector length for a square patch of side `side`.
 *
 * # Safety
 * `out` must be writable.
 */
enum TexlabStatus texlab_feature_length(enum TexlabAttribute attribute,
                                        size_t scales,
                                        size_t side,
                                        size_t *out);

/**
 * Tapers a square patch and writes its feature vector to `out`
 * (`capacity` doubles). `written` receives the length, also when the
 * buffer is too small.
 *
 * # Safety
 * `out` must point to `capacity` writable doubles; `written` must be
 * writable.
 */
enum TexlabStatus texlab_extract_features(const struct TexlabRaster *patch,
                                          enum TexlabAttribute attribute,
                                          size_t scales,
                                          double *out,
                                          size_t capacity,
                                          size_t *written);

/**
 * Loads a model JSON written by `texlab train`.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be writable.
 */
enum TexlabStatus texlab_model_load(const char *path, struct TexlabModel **out);

/**
 * # Safety
 * `model` must come from this library or be null.
 */
size_t texlab_model_feature_length(const struct TexlabModel *model);

/**
 * # Safety
 * `model` must come from this library or be null.
 */
size_t texlab_model_class_count(const struct TexlabModel *model);

/**
 * Predicts the class id of a feature vector. If `scores` is not null it
 * receives one score per model class (`scores_len` must cover them).
 *
 * # Safety
 * `features` must point to `len` doubles; `class_id` must be writable;
 * `scores`, if not null, must point to `scores_len` writable doubles.
 */
enum TexlabStatus texlab_model_predict(const struct TexlabModel *model,
                                       const double *features,
                                       size_t len,
                                       size_t *class_id,
                                       double *scores,
                                       size_t scores_len);

/**
 * # Safety
 * `model` must come from this library and not be used afterwards.
 */
void texlab_model_free(struct TexlabModel *model);

/**
 * Scores `n` predicted labels against `n` reference labels. When `iu` is
 * not null it receives `n_classes` per-class values, NaN for classes absent
 * from both arrays.
 *
 * # Safety
 * `pred` and `reference` must point to `n` values; `out` must be writable;
 * `iu`, if not null, must point to `n_classes` writable doubles.
 */
enum TexlabStatus texlab_metrics(const uint32_t *pred,
                                 const uint32_t *reference,
                                 size_t n,
                                 size_t n_classes,
                                 struct TexlabMetrics *out,
                                 double *iu);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TEXLAB_H */
