#ifndef MDIQKD_H
#define MDIQKD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MdiqkdStatus {
  MDIQKD_STATUS_OK = 0,
  MDIQKD_STATUS_NULL_POINTER = 1,
  MDIQKD_STATUS_INVALID_UTF8 = 2,
  // Malformed JSON, unknown fields or values outside their domain.
  MDIQKD_STATUS_INVALID_INPUT = 3,
  // The measurements are inconsistent with any source; no key.
  MDIQKD_STATUS_INFEASIBLE = 4,
  // The LP solver failed or a scalar fell outside its domain.
  MDIQKD_STATUS_NUMERIC = 5,
  MDIQKD_STATUS_PANIC = 6,
} MdiqkdStatus;

typedef enum MdiqkdAnalysis {
  MDIQKD_ANALYSIS_ASYMPTOTIC = 0,
  MDIQKD_ANALYSIS_GAUSSIAN = 1,
  MDIQKD_ANALYSIS_COMPOSABLE = 2,
} MdiqkdAnalysis;

// Parsed measurement set. Create with [`mdiqkd_measurements_from_json`],
// release with [`mdiqkd_measurements_free`].
typedef struct MdiqkdMeasurements MdiqkdMeasurements;

typedef struct MdiqkdKeyRate {
  // Secure key rate in bits per second, zero when `no_key`.
  double rate_bps;
  double rate_per_clock;
  // Unclamped value of the rate formula per clock cycle.
  double raw_rate_per_clock;
  double y_x_11_lower;
  double e_x_11_upper;
  double q_z_11;
  bool no_key;
} MdiqkdKeyRate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parses a measurement file (the JSON accepted by `mdiqkd keyrate`).
//
// # Safety
// `json` must be null or a NUL-terminated string; `out` must be null or
// valid for a pointer write.
enum MdiqkdStatus mdiqkd_measurements_from_json(const char *json, struct MdiqkdMeasurements **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `handle` must be null or come from [`mdiqkd_measurements_from_json`] and
// not have been freed already.
void mdiqkd_measurements_free(struct MdiqkdMeasurements *handle);

// Estimates the decoy bounds and the secure key rate with default settings
// for `analysis`. A run that certifies no key still returns `Ok` with
// `no_key` set; inconsistent data returns `Infeasible`.
//
// # Safety
// `handle` must be null or a live handle; `out` must be null or valid for
// a write.
enum MdiqkdStatus mdiqkd_key_rate(const struct MdiqkdMeasurements *handle,
                                  enum MdiqkdAnalysis analysis,
                                  struct MdiqkdKeyRate *out);

// Number of transmitted pulses recorded in the measurement set.
//
// # Safety
// `handle` must be null or a live handle; `out` must be null or valid for
// a write.
enum MdiqkdStatus mdiqkd_measurements_n_total(const struct MdiqkdMeasurements *handle, double *out);

// Binary Shannon entropy in bits.
//
// # Safety
// `out` must be null or valid for a write.
enum MdiqkdStatus mdiqkd_binary_entropy(double p, double *out);

// Phase error `2π·Δt·Δf` in radians.
//
// # Safety
// `out` must be null or valid for a write.
enum MdiqkdStatus mdiqkd_phase_error(double delta_t_s, double delta_f_hz, double *out);

// Rise of the X-basis QBER above 25 % for a phase error in radians.
double mdiqkd_x_qber_penalty(double delta_phi_rad);

// Message for the most recent failure on this thread, or null when the last
// call succeeded. The pointer stays valid until the next call into this
// library from the same thread.
const char *mdiqkd_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *mdiqkd_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MDIQKD_H */
