#ifndef JAMLAB_H
#define JAMLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define JAMLAB_PROFILE_CANONICAL 0

#define JAMLAB_PROFILE_REDUCED 1

// Result of every fallible call.
typedef enum JamlabStatus {
  JAMLAB_STATUS_OK = 0,
  JAMLAB_STATUS_NULL_ARGUMENT = 1,
  // Parameter, configuration or buffer alignment rejected.
  JAMLAB_STATUS_INVALID_ARGUMENT = 2,
  JAMLAB_STATUS_IO = 3,
  // Bad magic, version, layout or JSON.
  JAMLAB_STATUS_FORMAT = 4,
  JAMLAB_STATUS_INTEGRITY = 5,
  // Data that does not fit the model or operation.
  JAMLAB_STATUS_INPUT = 6,
  JAMLAB_STATUS_TRAINING = 7,
  JAMLAB_STATUS_CHECKPOINT = 8,
  JAMLAB_STATUS_BUFFER_TOO_SMALL = 9,
  JAMLAB_STATUS_PANIC = 10,
} JamlabStatus;

// Complex baseband samples.
typedef struct JamlabBuffer JamlabBuffer;

// Channel-major feature grid.
typedef struct JamlabGrid JamlabGrid;

// Trained detector.
typedef struct JamlabModel JamlabModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *jamlab_version(void);

// Message of the last failed call on this thread, or NULL. The pointer
// stays valid until the next jamlab call on the same thread.
const char *jamlab_last_error(void);

// Renders a jammer described as JSON, e.g.
// `{"kind":"single_tone","power_j":1,"freq_hz":1000,"phase_rad":0}`.
//
// # Safety
// `spec_json` must be a NUL-terminated string and `out` a writable pointer.
enum JamlabStatus jamlab_jammer_generate(const char *spec_json,
                                         double sample_rate_hz,
                                         double duration_s,
                                         uint64_t seed,
                                         struct JamlabBuffer **out);

// Random QPSK-OFDM traffic with the default numerology, unit mean power.
//
// # Safety
// `out` must be a writable pointer.
enum JamlabStatus jamlab_ofdm_generate(double sample_rate_hz,
                                       double duration_s,
                                       uint64_t seed,
                                       struct JamlabBuffer **out);

// `signal + g * jammer + noise` with the jammer active over the whole
// buffer. `jammer` may be NULL for a clean mix.
//
// # Safety
// Handles must be live or NULL; `out` must be writable.
enum JamlabStatus jamlab_mix(const struct JamlabBuffer *signal,
                             const struct JamlabBuffer *jammer,
                             double jsr_db,
                             double snr_db,
                             uint64_t seed,
                             struct JamlabBuffer **out);

// # Safety
// `path` must be NUL-terminated; `out` writable.
enum JamlabStatus jamlab_buffer_load(const char *path, struct JamlabBuffer **out);

// # Safety
// `buffer` must be live; `path` NUL-terminated.
enum JamlabStatus jamlab_buffer_save(const struct JamlabBuffer *buffer, const char *path);

// Sample count; 0 for NULL.
//
// # Safety
// `buffer` must be live or NULL.
size_t jamlab_buffer_len(const struct JamlabBuffer *buffer);

// # Safety
// `buffer` must be live or NULL.
double jamlab_buffer_sample_rate(const struct JamlabBuffer *buffer);

// # Safety
// `buffer` must be live or NULL.
double jamlab_buffer_mean_power(const struct JamlabBuffer *buffer);

// Copies interleaved I/Q into `dst`, which must hold `2 * len` floats.
//
// # Safety
// `dst` must point to `capacity` writable floats; `written` may be NULL.
enum JamlabStatus jamlab_buffer_copy_iq(const struct JamlabBuffer *buffer,
                                        float *dst,
                                        size_t capacity,
                                        size_t *written);

// # Safety
// `buffer` must come from this library and not be used afterwards.
void jamlab_buffer_free(struct JamlabBuffer *buffer);

// Rasterizes a waveform with `JAMLAB_PROFILE_CANONICAL` or
// `JAMLAB_PROFILE_REDUCED` geometry. The grid is raw (not normalized).
//
// # Safety
// `buffer` must be live; `out` writable.
enum JamlabStatus jamlab_grid_render(const struct JamlabBuffer *buffer,
                                     uint32_t profile,
                                     struct JamlabGrid **out);

// Standardizes each channel with the given mean and standard deviation.
//
// # Safety
// `mean` and `std` must each point to `channels` doubles.
enum JamlabStatus jamlab_grid_normalize(const struct JamlabGrid *grid,
                                        const double *mean,
                                        const double *std,
                                        size_t channels,
                                        struct JamlabGrid **out);

// # Safety
// `path` must be NUL-terminated; `out` writable.
enum JamlabStatus jamlab_grid_load(const char *path, struct JamlabGrid **out);

// # Safety
// `grid` must be live; `path` NUL-terminated.
enum JamlabStatus jamlab_grid_save(const struct JamlabGrid *grid, const char *path);

// # Safety
// `grid` must be live; the three outputs writable.
enum JamlabStatus jamlab_grid_dims(const struct JamlabGrid *grid,
                                   size_t *channels,
                                   size_t *height,
                                   size_t *width);

// Copies the `C * H * W` values, channel-major.
//
// # Safety
// `dst` must point to `capacity` writable floats; `written` may be NULL.
enum JamlabStatus jamlab_grid_copy(const struct JamlabGrid *grid,
                                   float *dst,
                                   size_t capacity,
                                   size_t *written);

// # Safety
// `grid` must come from this library and not be used afterwards.
void jamlab_grid_free(struct JamlabGrid *grid);

// Loads a JNET checkpoint.
//
// # Safety
// `path` must be NUL-terminated; `out` writable.
enum JamlabStatus jamlab_model_load(const char *path, struct JamlabModel **out);

// Jammed probability of one normalized grid.
//
// # Safety
// Handles must be live; `probability` writable.
enum JamlabStatus jamlab_model_predict(const struct JamlabModel *model,
                                       const struct JamlabGrid *grid,
                                       double *probability);

// # Safety
// `model` must be live or NULL.
size_t jamlab_model_param_count(const struct JamlabModel *model);

// # Safety
// `model` must come from this library and not be used afterwards.
void jamlab_model_free(struct JamlabModel *model);

// Runs a hopping simulation described as JSON (fields `plan`, `jammer`,
// `policy`, `n_slots`, `predictor`, ...; all optional) and returns the
// summary as a JSON string to release with [`jamlab_string_free`].
//
// # Safety
// `config_json` must be NUL-terminated; `summary_json` writable.
enum JamlabStatus jamlab_simulate(const char *config_json, uint64_t seed, char **summary_json);

// # Safety
// `s` must come from this library and not be used afterwards.
void jamlab_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* JAMLAB_H */
