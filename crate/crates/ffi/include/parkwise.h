#ifndef PARKWISE_H
#define PARKWISE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every `pw_*` call.
 */
typedef enum PwStatus {
  PW_STATUS_OK = 0,
  PW_STATUS_NULL_ARGUMENT = 1,
  PW_STATUS_INVALID_ARGUMENT = 2,
  PW_STATUS_PARSE = 3,
  PW_STATUS_REGISTRY_MISS = 4,
  PW_STATUS_UNKNOWN_CAMERA = 5,
  PW_STATUS_STALE_FRAME = 6,
  PW_STATUS_NO_AVAILABILITY = 7,
  PW_STATUS_INTERNAL = 8,
} PwStatus;

/**
 * Opaque tracker instance.
 */
typedef struct PwEngine PwEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Great-circle distance in km between two WGS-84 points in degrees.
 *
 * # Safety
 * `out_km` must be null or valid for writes.
 */
enum PwStatus pw_haversine_km(double lat_a,
                              double lon_a,
                              double lat_b,
                              double lon_b,
                              double *out_km);

/**
 * Intersection over union of two `[x_min, y_min, x_max, y_max]` boxes.
 *
 * # Safety
 * `a` and `b` must be null or point to 4 readable doubles; `out_iou` must
 * be null or valid for writes.
 */
enum PwStatus pw_iou(const double *a, const double *b, double *out_iou);

/**
 * `alpha * distance_km + (1 - alpha) / spots`.
 *
 * # Safety
 * `out_value` must be null or valid for writes.
 */
enum PwStatus pw_objective(double distance_km, uint32_t spots, double alpha, double *out_value);

/**
 * Creates a tracker for a registry given as a JSON array of lots.
 * `config_json` may be null for the default tracker configuration.
 *
 * # Safety
 * String arguments must be null or NUL-terminated; `out_engine` must be
 * null or valid for writes.
 */
enum PwStatus pw_engine_new(const char *registry_json,
                            const char *config_json,
                            struct PwEngine **out_engine);

/**
 * Releases an engine. Null is ignored.
 *
 * # Safety
 * `engine` must be null or a pointer from [`pw_engine_new`] not yet freed.
 */
void pw_engine_free(struct PwEngine *engine);

/**
 * Applies one wire-format detection event. On error the engine is unchanged.
 *
 * # Safety
 * `engine` must come from [`pw_engine_new`]; `event_json` must be null or
 * NUL-terminated.
 */
enum PwStatus pw_engine_apply_event(struct PwEngine *engine, const char *event_json);

/**
 * Current free-spot count for one lot.
 *
 * # Safety
 * `engine` must come from [`pw_engine_new`]; `lot_id` must be null or
 * NUL-terminated; `out_spots` must be null or valid for writes.
 */
enum PwStatus pw_engine_available_spots(const struct PwEngine *engine,
                                        const char *lot_id,
                                        uint32_t *out_spots);

/**
 * Takes a snapshot and returns its canonical JSON.
 *
 * # Safety
 * `engine` must come from [`pw_engine_new`]; `out_json` must be null or
 * valid for writes. Free the result with [`pw_string_free`].
 */
enum PwStatus pw_engine_snapshot_json(struct PwEngine *engine, char **out_json);

/**
 * Ranks lots for a driver at (`lat`, `lon`) against a fresh snapshot.
 * `top_k` of 0 returns every lot with free spots. The result is the JSON
 * ranking, best first.
 *
 * # Safety
 * `engine` must come from [`pw_engine_new`]; `out_json` must be null or
 * valid for writes. Free the result with [`pw_string_free`].
 */
enum PwStatus pw_engine_recommend_json(struct PwEngine *engine,
                                       double lat,
                                       double lon,
                                       double alpha,
                                       size_t top_k,
                                       char **out_json);

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *pw_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void pw_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PARKWISE_H */
