#ifndef EEG_HOMOG_H
#define EEG_HOMOG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

enum EhStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  EH_STATUS_OK = 0,
  EH_STATUS_NULL_POINTER = 1,
  EH_STATUS_INVALID_ARGUMENT = 2,
  EH_STATUS_INVALID_CONFIG = 3,
  EH_STATUS_SHAPE_MISMATCH = 4,
  EH_STATUS_FORMAT = 5,
  EH_STATUS_IO = 6,
  EH_STATUS_BUFFER_TOO_SMALL = 7,
  EH_STATUS_PANIC = 8,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum EhStatus EhStatus;
#else
typedef int32_t EhStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

enum EhEdgeMode
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  EH_EDGE_MODE_CANNY = 0,
  EH_EDGE_MODE_ADAPTIVE_MEAN = 1,
  EH_EDGE_MODE_ADAPTIVE_GAUSSIAN = 2,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum EhEdgeMode EhEdgeMode;
#else
typedef int32_t EhEdgeMode;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

enum EhInterpolation
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  EH_INTERPOLATION_BILINEAR = 0,
  EH_INTERPOLATION_NEAREST = 1,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum EhInterpolation EhInterpolation;
#else
typedef int32_t EhInterpolation;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

// Binary edge map.
typedef struct EhEdgeMap EhEdgeMap;

// Single-plane image with values in [0, 1].
typedef struct EhImage EhImage;

// Multichannel recording, `channels x length`.
typedef struct EhSample EhSample;

// `[3, H, W]` tensor: encoded, edge, enriched.
typedef struct EhTensor EhTensor;

// Edge detector settings. Thresholds are on the 0..255 scale; `mode` is an
// `EhEdgeMode` value.
typedef struct EhEdgeConfig {
  int32_t mode;
  size_t blur_kernel;
  double canny_low;
  double canny_high;
  size_t adaptive_block;
  double adaptive_c;
} EhEdgeConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next failing call on the same thread.
const char *eh_last_error(void);

struct EhEdgeConfig eh_edge_config_default(void);

// Copies `channels * length` channel-major values. `label < 0` means
// unlabeled.
//
// # Safety
// `data` must point to `channels * length` readable doubles and `out` must
// be writable.
EhStatus eh_sample_new(size_t channels,
                       size_t length,
                       const double *data,
                       int64_t label,
                       struct EhSample **out);

// Reads an EEGB or CSV recording.
//
// # Safety
// `path` must be a NUL-terminated string and `out` must be writable.
EhStatus eh_sample_read(const char *path, struct EhSample **out);

// # Safety
// `sample` must be a live handle or NULL.
size_t eh_sample_channels(const struct EhSample *sample);

// # Safety
// `sample` must be a live handle or NULL.
size_t eh_sample_length(const struct EhSample *sample);

// Label of the sample, or -1 when unlabeled (or `sample` is NULL).
//
// # Safety
// `sample` must be a live handle or NULL.
int64_t eh_sample_label(const struct EhSample *sample);

// # Safety
// `sample` must come from this library and not be used afterwards.
void eh_sample_free(struct EhSample *sample);

// Mean square of one channel.
//
// # Safety
// `sample` must be a live handle and `out` writable.
EhStatus eh_channel_power(const struct EhSample *sample, size_t channel, double *out);

// Homogenizes channel magnitudes and resizes to `height x width`.
// `interpolation` is an `EhInterpolation` value.
//
// # Safety
// `sample` must be a live handle and `out` writable.
EhStatus eh_icwmh(const struct EhSample *sample,
                  size_t height,
                  size_t width,
                  int32_t interpolation,
                  struct EhImage **out);

// Wraps row-major pixels in [0, 1].
//
// # Safety
// `data` must point to `height * width` readable doubles and `out` must be
// writable.
EhStatus eh_image_new(size_t height, size_t width, const double *data, struct EhImage **out);

// # Safety
// `image` must be a live handle or NULL.
size_t eh_image_height(const struct EhImage *image);

// # Safety
// `image` must be a live handle or NULL.
size_t eh_image_width(const struct EhImage *image);

// Copies the row-major pixels into `buf`, which must hold `height * width`.
//
// # Safety
// `buf` must point to `len` writable doubles.
EhStatus eh_image_copy(const struct EhImage *image, double *buf, size_t len);

// # Safety
// `image` must come from this library and not be used afterwards.
void eh_image_free(struct EhImage *image);

// Runs the edge detector. A NULL `config` uses the defaults.
//
// # Safety
// `image` must be a live handle, `config` valid or NULL, `out` writable.
EhStatus eh_detect_edges(const struct EhImage *image,
                         const struct EhEdgeConfig *config,
                         struct EhEdgeMap **out);

// # Safety
// `edges` must be a live handle or NULL.
size_t eh_edge_map_count(const struct EhEdgeMap *edges);

// # Safety
// `buf` must point to `len` writable doubles.
EhStatus eh_edge_map_copy(const struct EhEdgeMap *edges, double *buf, size_t len);

// # Safety
// `edges` must come from this library and not be used afterwards.
void eh_edge_map_free(struct EhEdgeMap *edges);

// Stacks encoded, edge and enriched planes.
//
// # Safety
// Both inputs must be live handles and `out` writable.
EhStatus eh_assemble(const struct EhImage *image,
                     const struct EhEdgeMap *edges,
                     struct EhTensor **out);

// Number of values in the tensor (`3 * H * W`).
//
// # Safety
// `tensor` must be a live handle or NULL.
size_t eh_tensor_len(const struct EhTensor *tensor);

// Copies the layer-major values into `buf`.
//
// # Safety
// `buf` must point to `len` writable doubles.
EhStatus eh_tensor_copy(const struct EhTensor *tensor, double *buf, size_t len);

// # Safety
// `tensor` must come from this library and not be used afterwards.
void eh_tensor_free(struct EhTensor *tensor);

// Softmax cross-entropy of `logits[0..n]` against `label`.
//
// # Safety
// `logits` must point to `n` readable doubles and `out` be writable.
EhStatus eh_ce_loss(const double *logits, size_t n, size_t label, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EEG_HOMOG_H */
