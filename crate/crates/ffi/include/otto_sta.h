#ifndef OTTO_STA_H
#define OTTO_STA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OttoStatus {
  OTTO_STATUS_OK = 0,
  OTTO_STATUS_NULL_POINTER = 1,
  OTTO_STATUS_INVALID_ARGUMENT = 2,
  OTTO_STATUS_INVALID_PARAMETERS = 3,
  OTTO_STATUS_OUTSIDE_COOLING_WINDOW = 4,
  OTTO_STATUS_INVALID_PROFILE = 5,
  OTTO_STATUS_BOUNDARY_VIOLATION = 6,
  OTTO_STATUS_QUADRATURE = 7,
  OTTO_STATUS_OPTIMIZATION = 8,
  OTTO_STATUS_IO = 9,
  OTTO_STATUS_JSON = 10,
  OTTO_STATUS_NOTHING_TO_EXPORT = 11,
  OTTO_STATUS_METRIC_VIOLATION = 12,
  OTTO_STATUS_PANIC = 99,
} OttoStatus;

/**
 * An experiment configuration as read by the command-line tool.
 */
typedef struct OttoConfig OttoConfig;

/**
 * A frequency ramp for the compression stroke.
 */
typedef struct OttoProfile OttoProfile;

/**
 * Operating point of the refrigerator.
 */
typedef struct OttoParams {
  double omega1;
  double omega2;
  double beta1;
  double beta2;
  double tau;
} OttoParams;

/**
 * ω and its first two time derivatives at one instant.
 */
typedef struct OttoJet {
  double omega;
  double omega_dot;
  double omega_ddot;
} OttoJet;

/**
 * Energetics of one cycle. The `hsta_*` fields, `min_omega_sq`,
 * `trap_inverted` and `residual_max` are zero for the sudden quench.
 */
typedef struct OttoCycleReport {
  double w1;
  double w3;
  double q4;
  double c_ab;
  double c_cd;
  double hsta_ab;
  double hsta_cd;
  double j_c;
  double eps;
  double eps_ad;
  double eps_c;
  double chi;
  double min_omega_sq;
  bool trap_inverted;
  /**
   * Largest of the six boundary-condition residuals.
   */
  double residual_max;
} OttoCycleReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Description of the last failure on this thread, or NULL if none. The
 * string stays valid until the next failing call on this thread.
 */
const char *otto_last_error_message(void);

/**
 * Version of the library as a static string.
 */
const char *otto_version(void);

/**
 * The (10, −15, 6) polynomial ramp between `params.omega1` and
 * `params.omega2` over `params.tau`.
 *
 * # Safety
 * `params` must point to a valid [`OttoParams`] and `out` to writable
 * storage for a handle.
 */
enum OttoStatus otto_profile_benchmark(const struct OttoParams *params, struct OttoProfile **out);

/**
 * ω₁ + Δω Σ αₙ (t/τ)ⁿ with `alpha[0]` multiplying the cube.
 *
 * # Safety
 * `alpha` must point to `n` readable doubles; see
 * [`otto_profile_benchmark`] for the other arguments.
 */
enum OttoStatus otto_profile_polynomial(const struct OttoParams *params,
                                        const double *alpha,
                                        size_t n,
                                        struct OttoProfile **out);

/**
 * Linear ramp between `t1` and `t2` with both corners smoothed over ±`sigma`.
 *
 * # Safety
 * See [`otto_profile_benchmark`].
 */
enum OttoStatus otto_profile_smoothed_ramp(const struct OttoParams *params,
                                           double t1,
                                           double t2,
                                           double sigma,
                                           struct OttoProfile **out);

/**
 * Parses a profile document.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` writable storage for a
 * handle.
 */
enum OttoStatus otto_profile_from_json(const char *json, struct OttoProfile **out);

/**
 * Reads a profile document from a file.
 *
 * # Safety
 * As [`otto_profile_from_json`], with `path` a NUL-terminated path.
 */
enum OttoStatus otto_profile_load(const char *path, struct OttoProfile **out);

/**
 * Serializes a profile as a JSON document. Release the string with
 * [`otto_string_free`].
 *
 * # Safety
 * `profile` must be a live handle and `out` writable.
 */
enum OttoStatus otto_profile_to_json(const struct OttoProfile *profile, char **out);

/**
 * Frees a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void otto_string_free(char *s);

/**
 * Stroke duration of a profile.
 *
 * # Safety
 * `profile` must be a live handle and `out` writable.
 */
enum OttoStatus otto_profile_tau(const struct OttoProfile *profile, double *out);

/**
 * ω, ω̇ and ω̈ at `t`.
 *
 * # Safety
 * `profile` must be a live handle and `out` writable.
 */
enum OttoStatus otto_profile_eval(const struct OttoProfile *profile, double t, struct OttoJet *out);

/**
 * Releases a profile. NULL is ignored.
 *
 * # Safety
 * `profile` must come from this library and not be freed twice.
 */
void otto_profile_free(struct OttoProfile *profile);

/**
 * Full energetics of a cycle driven by `profile` on the compression stroke
 * and its time reverse on the expansion stroke. The profile's endpoints
 * must match `params`, but its boundary conditions are not enforced; see
 * `residual_max`.
 *
 * # Safety
 * `profile` must be a live handle, `params` valid and `out` writable.
 */
enum OttoStatus otto_evaluate(const struct OttoProfile *profile,
                              const struct OttoParams *params,
                              struct OttoCycleReport *out);

/**
 * Energetics of the instantaneous-quench cycle.
 *
 * # Safety
 * `params` must be valid and `out` writable.
 */
enum OttoStatus otto_sudden_quench(const struct OttoParams *params, struct OttoCycleReport *out);

/**
 * The default experiment configuration.
 *
 * # Safety
 * `out` must be writable storage for a handle.
 */
enum OttoStatus otto_config_default(struct OttoConfig **out);

/**
 * Parses an experiment configuration; unknown keys are rejected.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` writable.
 */
enum OttoStatus otto_config_from_json(const char *json, struct OttoConfig **out);

/**
 * # Safety
 * `config` must be a live handle.
 */
enum OttoStatus otto_config_set_seed(struct OttoConfig *config, uint64_t seed);

/**
 * Restart count of every ensemble the config runs.
 *
 * # Safety
 * `config` must be a live handle.
 */
enum OttoStatus otto_config_set_restarts(struct OttoConfig *config, size_t restarts);

/**
 * # Safety
 * `config` must be a live handle and `dir` a NUL-terminated path.
 */
enum OttoStatus otto_config_set_output_dir(struct OttoConfig *config, const char *dir);

/**
 * Releases a config. NULL is ignored.
 *
 * # Safety
 * `config` must come from this library and not be freed twice.
 */
void otto_config_free(struct OttoConfig *config);

/**
 * Trains the configured ensemble in memory and returns its best
 * post-processed ramp. Nothing is written to disk.
 *
 * # Safety
 * `config` must be a live handle and `out` writable.
 */
enum OttoStatus otto_optimize(const struct OttoConfig *config, struct OttoProfile **out);

/**
 * Runs one command of the command-line tool (`evaluate`, `optimize`,
 * `sweep`, `audit` or `export`), writing its files under the config's
 * output directory.
 *
 * # Safety
 * `config` must be a live handle and `command` a NUL-terminated string.
 */
enum OttoStatus otto_run_command(const struct OttoConfig *config, const char *command);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OTTO_STA_H */
