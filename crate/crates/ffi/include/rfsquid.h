#ifndef RFSQUID_H
#define RFSQUID_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RfsqStatus {
  RFSQ_STATUS_OK = 0,
  RFSQ_STATUS_NULL_POINTER = 1,
  RFSQ_STATUS_INVALID_UTF8 = 2,
  RFSQ_STATUS_CONFIG = 3,
  RFSQ_STATUS_NUMERICAL = 4,
  RFSQ_STATUS_IO = 5,
  RFSQ_STATUS_OUT_OF_RANGE = 6,
  RFSQ_STATUS_PANIC = 7,
} RfsqStatus;

/**
 * Run configuration handle.
 */
typedef struct RfsqConfig RfsqConfig;

/**
 * Ensemble-averaged qubit trace handle.
 */
typedef struct RfsqTrace RfsqTrace;

/**
 * Qubit frame at zero bias.
 */
typedef struct RfsqFrame {
  double v_x;
  double phi_c;
  double isolation;
  /**
   * Weight of the lowest levels in the top quarter of the basis.
   */
  double basis_tail;
  double e1;
  double e2;
  double e3;
  double e4;
} RfsqFrame;

/**
 * Outcome of a fitted experiment. Fields that do not apply are NaN.
 */
typedef struct RfsqReport {
  double d_fit;
  double d_pred;
  double relative_deviation;
  double leakage_max;
  double isolation;
  double endpoint_deviation;
  double bloch_rms;
  bool passed;
} RfsqReport;

/**
 * One time sample of a trace.
 */
typedef struct RfsqSample {
  double time;
  double rho11_energy;
  double p_x;
  double p_y;
  double p_z;
  double leakage;
  double stderr_rho11;
} RfsqSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *rfsq_version(void);

/**
 * Copy the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the length the full message needs including
 * the terminator, or 0 if there is no error.
 *
 * # Safety
 * `buf` must be null or point to at least `len` writable bytes.
 */
size_t rfsq_last_error(char *buf, size_t len);

/**
 * `4 (V0 phi_c)^2 delta^2 / omega_c`.
 *
 * # Safety
 * `out` must be null or a valid pointer to a double.
 */
enum RfsqStatus rfsq_predict_d(double v0_phi_c, double delta, double omega_c, double *out);

/**
 * Built-in default configuration.
 *
 * # Safety
 * `out` must be null or a valid pointer to a handle slot.
 */
enum RfsqStatus rfsq_config_default(struct RfsqConfig **out);

/**
 * Parse and validate a JSON configuration; missing fields take defaults.
 *
 * # Safety
 * `json` must be null or a NUL-terminated string; `out` null or a valid
 * pointer to a handle slot.
 */
enum RfsqStatus rfsq_config_from_json(const char *json, struct RfsqConfig **out);

/**
 * Fully resolved configuration as JSON. Release with [`rfsq_string_free`].
 *
 * # Safety
 * `config` must be a live handle or null; `out` null or a valid pointer.
 */
enum RfsqStatus rfsq_config_to_json(const struct RfsqConfig *config, char **out);

/**
 * # Safety
 * `config` must be null or a handle from this library not yet freed.
 */
void rfsq_config_free(struct RfsqConfig *config);

/**
 * # Safety
 * `s` must be null or a string returned by this library not yet freed.
 */
void rfsq_string_free(char *s);

/**
 * Qubit frame of the configured Hamiltonian at zero bias.
 *
 * # Safety
 * `config` must be a live handle or null; `out` null or a valid pointer.
 */
enum RfsqStatus rfsq_frame(const struct RfsqConfig *config, struct RfsqFrame *out);

/**
 * Run the configured ensemble. `workers = 0` uses all cores; the result does
 * not depend on it.
 *
 * # Safety
 * `config` must be a live handle or null; `out` null or a valid pointer.
 */
enum RfsqStatus rfsq_ensemble_run(const struct RfsqConfig *config,
                                  size_t workers,
                                  struct RfsqTrace **out);

/**
 * Dephasing from the ground state with an exponential fit. `trace_out` may
 * be null if the trace is not wanted.
 *
 * # Safety
 * `config` must be a live handle or null; `report` null or valid;
 * `trace_out` null or a valid pointer to a handle slot.
 */
enum RfsqStatus rfsq_dephasing(const struct RfsqConfig *config,
                               size_t workers,
                               struct RfsqReport *report,
                               struct RfsqTrace **trace_out);

/**
 * Damped oscillation from `|L>` with a damped-cosine fit and the Bloch
 * comparison.
 *
 * # Safety
 * As for [`rfsq_dephasing`].
 */
enum RfsqStatus rfsq_oscillation(const struct RfsqConfig *config,
                                 size_t workers,
                                 struct RfsqReport *report,
                                 struct RfsqTrace **trace_out);

/**
 * Number of samples, or 0 for a null handle.
 *
 * # Safety
 * `trace` must be null or a live handle.
 */
size_t rfsq_trace_len(const struct RfsqTrace *trace);

/**
 * # Safety
 * `trace` must be null or a live handle; `out` null or a valid pointer.
 */
enum RfsqStatus rfsq_trace_sample(const struct RfsqTrace *trace,
                                  size_t index,
                                  struct RfsqSample *out);

/**
 * Write the trace in the CLI's ensemble CSV format.
 *
 * # Safety
 * `trace` must be null or a live handle; `path` null or NUL-terminated.
 */
enum RfsqStatus rfsq_trace_write_csv(const struct RfsqTrace *trace, const char *path);

/**
 * # Safety
 * `trace` must be null or a handle from this library not yet freed.
 */
void rfsq_trace_free(struct RfsqTrace *trace);

/**
 * Fit `rho11 = (1 + A exp(-D t)) / 2`, weighted by the per-point standard
 * error `sigma` unless it is null.
 *
 * # Safety
 * `times` and `rho11` (and `sigma` if non-null) must point to `n` doubles;
 * `d_out` and `amplitude_out` must be valid.
 */
enum RfsqStatus rfsq_fit_exponential(const double *times,
                                     const double *rho11,
                                     const double *sigma,
                                     size_t n,
                                     double *d_out,
                                     double *amplitude_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RFSQUID_H */
