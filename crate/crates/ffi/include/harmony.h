#ifndef HARMONY_H
#define HARMONY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum {
  HARMONY_STATUS_OK = 0,
  HARMONY_STATUS_NULL_POINTER = 1,
  HARMONY_STATUS_INVALID_ARGUMENT = 2,
  HARMONY_STATUS_DECODE = 3,
  HARMONY_STATUS_PARSE = 4,
  HARMONY_STATUS_DIMENSION = 5,
  HARMONY_STATUS_IO = 6,
  HARMONY_STATUS_NUMERIC = 7,
  HARMONY_STATUS_CHECKPOINT = 8,
  HARMONY_STATUS_FIT = 9,
  HARMONY_STATUS_INTERNAL = 10,
  HARMONY_STATUS_PANIC = 11,
} HarmonyStatus;

typedef enum {
  HARMONY_FORMAT_PNG = 0,
  /**
   * Binary or ASCII PNM (P2, P3, P5, P6); encoding writes P6 / P5.
   */
  HARMONY_FORMAT_PNM = 1,
} HarmonyFormat;

typedef struct HarmonyImage HarmonyImage;

typedef struct HarmonyLut HarmonyLut;

typedef struct HarmonyMask HarmonyMask;

typedef struct HarmonyModel HarmonyModel;

/**
 * Byte buffer owned by the library; release with [`harmony_buffer_free`].
 */
typedef struct {
  uint8_t *data;
  size_t len;
} HarmonyBuffer;

typedef struct {
  size_t x;
  size_t y;
  size_t w;
  size_t h;
} HarmonyRect;

typedef struct {
  /**
   * Non-zero: use a background crop around the placement as reference.
   */
  uint8_t locality;
  /**
   * Reference crop scale, at least 1.
   */
  double expand;
} HarmonyOptions;

typedef struct {
  double mse;
  /**
   * `INFINITY` for identical images.
   */
  double psnr;
  double ssim;
} HarmonyMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL if none.
 * Valid until the next failing call on the same thread.
 */
const char *harmony_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *harmony_version(void);

/**
 * Image from `width * height * 3` interleaved RGB floats in `[0, 1]`.
 *
 * # Safety
 * `data` must point to `len` readable floats; `out` must be writable.
 */
HarmonyStatus harmony_image_new(size_t width,
                                size_t height,
                                const float *data,
                                size_t len,
                                HarmonyImage **out);

/**
 * # Safety
 * `bytes` must point to `len` readable bytes; `out` must be writable.
 */
HarmonyStatus harmony_image_decode(const uint8_t *bytes,
                                   size_t len,
                                   HarmonyFormat format,
                                   HarmonyImage **out);

/**
 * Encodes to 8-bit PNG or PNM. Free the buffer with [`harmony_buffer_free`].
 *
 * # Safety
 * `image` must be a live handle; `out` must be writable.
 */
HarmonyStatus harmony_image_encode(const HarmonyImage *image,
                                   HarmonyFormat format,
                                   HarmonyBuffer *out);

/**
 * # Safety
 * `buffer` must come from this library or be zeroed; it is reset to empty.
 */
void harmony_buffer_free(HarmonyBuffer *buffer);

/**
 * Width in pixels, or 0 for NULL.
 *
 * # Safety
 * `image` must be NULL or a live handle.
 */
size_t harmony_image_width(const HarmonyImage *image);

/**
 * Height in pixels, or 0 for NULL.
 *
 * # Safety
 * `image` must be NULL or a live handle.
 */
size_t harmony_image_height(const HarmonyImage *image);

/**
 * Copies the interleaved RGB samples into `dst`, which must hold exactly
 * `width * height * 3` floats.
 *
 * # Safety
 * `image` must be a live handle; `dst` must point to `len` writable floats.
 */
HarmonyStatus harmony_image_read(const HarmonyImage *image, float *dst, size_t len);

/**
 * # Safety
 * `image` must be NULL or a handle not yet freed.
 */
void harmony_image_free(HarmonyImage *image);

/**
 * Soft mask from `width * height` alphas in `[0, 1]`.
 *
 * # Safety
 * `data` must point to `len` readable floats; `out` must be writable.
 */
HarmonyStatus harmony_mask_new(size_t width,
                               size_t height,
                               const float *data,
                               size_t len,
                               HarmonyMask **out);

/**
 * # Safety
 * `mask` must be NULL or a handle not yet freed.
 */
void harmony_mask_free(HarmonyMask *mask);

/**
 * Parses `.cube` text. Parse failures return `HARMONY_STATUS_PARSE` and
 * the error message names the offending line.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
HarmonyStatus harmony_lut_parse(const char *text, HarmonyLut **out);

/**
 * # Safety
 * `out` must be writable.
 */
HarmonyStatus harmony_lut_identity(size_t size, HarmonyLut **out);

/**
 * Lattice points per axis, or 0 for NULL.
 *
 * # Safety
 * `lut` must be NULL or a live handle.
 */
size_t harmony_lut_size(const HarmonyLut *lut);

/**
 * Trilinear lookup of one color.
 *
 * # Safety
 * `lut` must be a live handle; `rgb_in` and `rgb_out` must point to 3 floats.
 */
HarmonyStatus harmony_lut_apply_color(const HarmonyLut *lut, const float *rgb_in, float *rgb_out);

/**
 * # Safety
 * `lut` and `image` must be live handles; `out` must be writable.
 */
HarmonyStatus harmony_lut_apply(const HarmonyLut *lut,
                                const HarmonyImage *image,
                                HarmonyImage **out);

/**
 * # Safety
 * `lut` must be NULL or a handle not yet freed.
 */
void harmony_lut_free(HarmonyLut *lut);

/**
 * Loads a JSON checkpoint from a file path.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
HarmonyStatus harmony_model_load(const char *path, HarmonyModel **out);

/**
 * Untrained model; it leaves every foreground unchanged.
 *
 * # Safety
 * `out` must be writable.
 */
HarmonyStatus harmony_model_init(uint64_t seed, HarmonyModel **out);

/**
 * # Safety
 * `model` must be NULL or a handle not yet freed.
 */
void harmony_model_free(HarmonyModel *model);

/**
 * Harmonizes `fg` and blends it into `bg` at `placement` through `mask`.
 *
 * # Safety
 * All handles must be live; `out` must be writable.
 */
HarmonyStatus harmony_harmonize_composite(const HarmonyModel *model,
                                          const HarmonyImage *fg,
                                          const HarmonyImage *bg,
                                          const HarmonyMask *mask,
                                          HarmonyRect placement,
                                          HarmonyOptions options,
                                          HarmonyImage **out);

/**
 * Direct composite without harmonization.
 *
 * # Safety
 * All handles must be live; `out` must be writable.
 */
HarmonyStatus harmony_composite(const HarmonyImage *fg,
                                const HarmonyImage *bg,
                                const HarmonyMask *mask,
                                HarmonyRect placement,
                                HarmonyImage **out);

/**
 * MSE and PSNR on the 0-255 scale and SSIM of `image` against `reference`.
 *
 * # Safety
 * Both handles must be live; `out` must be writable.
 */
HarmonyStatus harmony_metrics(const HarmonyImage *image,
                              const HarmonyImage *reference,
                              HarmonyMetrics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HARMONY_H */
