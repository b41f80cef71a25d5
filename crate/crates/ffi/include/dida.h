#ifndef DIDA_H
#define DIDA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DidaStatus {
  DIDA_STATUS_OK = 0,
  DIDA_STATUS_NULL_ARGUMENT = 1,
  DIDA_STATUS_INVALID_UTF8 = 2,
  DIDA_STATUS_IO = 3,
  DIDA_STATUS_PARSE = 4,
  DIDA_STATUS_CONFIG = 5,
  DIDA_STATUS_CHECKPOINT = 6,
  DIDA_STATUS_INVALID = 7,
  DIDA_STATUS_BUFFER_TOO_SMALL = 8,
  DIDA_STATUS_PANIC = 9,
} DidaStatus;

/**
 * Opaque detector handle.
 */
typedef struct DidaDetector DidaDetector;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Owned by the
 * library.
 */
const char *dida_last_error(void);

/**
 * Library version, static.
 */
const char *dida_version(void);

/**
 * Opens a detector from a run config (TOML, as written by `dida train`)
 * and a checkpoint trained under it.
 *
 * # Safety
 * Paths must be NUL-terminated strings; `out` must be writable.
 */
enum DidaStatus dida_detector_open(const char *config_path,
                                   const char *checkpoint_path,
                                   struct DidaDetector **out);

/**
 * # Safety
 * `detector` must come from `dida_detector_open` and not be used again.
 */
void dida_detector_free(struct DidaDetector *detector);

/**
 * Fake-news probability for one record given as a canonical JSON line.
 *
 * # Safety
 * Pointers must be valid; `record_json` NUL-terminated.
 */
enum DidaStatus dida_predict_json(const struct DidaDetector *detector,
                                  const char *record_json,
                                  double *p_fake);

/**
 * Width of the per-text emotion vector.
 *
 * # Safety
 * `detector` must be valid or NULL (gives 0).
 */
size_t dida_emotion_dim(const struct DidaDetector *detector);

/**
 * Writes the emotion vector of `text` into `out` (capacity `cap`) and its
 * width into `written`. Fails with `BufferTooSmall` when `cap` is short,
 * still reporting the needed width.
 *
 * # Safety
 * `out` must hold `cap` doubles; other pointers valid.
 */
enum DidaStatus dida_emotion_vector(const struct DidaDetector *detector,
                                    const char *text,
                                    double *out,
                                    size_t cap,
                                    size_t *written);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DIDA_H */
