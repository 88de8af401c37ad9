#ifndef BREACHCAST_H
#define BREACHCAST_H

/* Generated by cbindgen from the breachcast-ffi crate. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BcStatus {
  BC_STATUS_OK = 0,
  BC_STATUS_NULL_POINTER = 1,
  BC_STATUS_INVALID_ARGUMENT = 2,
  BC_STATUS_VALIDATION = 3,
  BC_STATUS_NUMERICAL = 4,
  BC_STATUS_IO = 5,
  BC_STATUS_PARSE = 6,
  BC_STATUS_PANIC = 7,
} BcStatus;

typedef enum BcFailureMode {
  BC_FAILURE_MODE_TOTAL = 0,
  BC_FAILURE_MODE_PARTIAL = 1,
} BcFailureMode;

typedef enum BcResidualModel {
  BC_RESIDUAL_MODEL_GAUSSIAN = 0,
  BC_RESIDUAL_MODEL_ZERO_NOISE = 1,
} BcResidualModel;

/**
 * Dam, reservoir and breach inputs of a single forward run.
 */
typedef struct BcCase BcCase;

typedef struct BcDataset BcDataset;

typedef struct BcEnsemble BcEnsemble;

typedef struct BcHydrograph BcHydrograph;

typedef struct BcPredictionCase BcPredictionCase;

/**
 * Scalar results of one forward run.
 */
typedef struct BcHydrographSummary {
  /**
   * m³/s
   */
  double peak_discharge;
  /**
   * s
   */
  double time_to_peak;
  /**
   * m
   */
  double final_width;
  /**
   * s
   */
  double duration;
  enum BcFailureMode failure_mode;
  /**
   * Nonzero when the run stopped at the time horizon.
   */
  int32_t horizon_reached;
} BcHydrographSummary;

typedef struct BcEnsembleCounts {
  size_t members;
  size_t total_failures;
  size_t partial_failures;
  size_t failed_runs;
} BcEnsembleCounts;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next call into the library on the same thread.
 */
const char *bc_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *bc_version(void);

/**
 * Creates a deterministic dam case. Lengths in m, angle in degrees,
 * volume in m³.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum BcStatus bc_case_new(double dam_height,
                          double crest_width,
                          double embankment_slope,
                          double breach_angle,
                          double basin_exponent,
                          double level_drop,
                          double released_volume,
                          double final_breach_height,
                          double initial_depth_ratio,
                          struct BcCase **out);

/**
 * # Safety
 * `case` must be null or a handle from `bc_case_new` not yet freed.
 */
void bc_case_free(struct BcCase *case_);

/**
 * Runs the forward model with transport coefficient `gamma` and exponents
 * `nu`, `eta`.
 *
 * # Safety
 * `case` must be a live handle and `out` valid writable storage.
 */
enum BcStatus bc_simulate(const struct BcCase *case_,
                          double gamma,
                          double nu,
                          double eta,
                          struct BcHydrograph **out);

/**
 * # Safety
 * `h` must be null or a live hydrograph handle.
 */
void bc_hydrograph_free(struct BcHydrograph *h);

/**
 * Number of time samples, or 0 for a null handle.
 *
 * # Safety
 * `h` must be null or a live hydrograph handle.
 */
size_t bc_hydrograph_len(const struct BcHydrograph *h);

/**
 * # Safety
 * `h` must be a live handle and `out` valid writable storage.
 */
enum BcStatus bc_hydrograph_summary(const struct BcHydrograph *h, struct BcHydrographSummary *out);

/**
 * Copies the time series into caller buffers of length `len`, which must
 * equal `bc_hydrograph_len`. Any buffer may be null to skip that series:
 * time [s], breach discharge [m³/s], breach width [m], breach bottom [m]
 * and reservoir level [m].
 *
 * # Safety
 * Non-null buffers must hold `len` doubles.
 */
enum BcStatus bc_hydrograph_series(const struct BcHydrograph *h,
                                   double *time,
                                   double *discharge,
                                   double *width,
                                   double *bottom,
                                   double *level,
                                   size_t len);

/**
 * The fifteen bundled historical records.
 *
 * # Safety
 * `out` must be valid writable storage.
 */
enum BcStatus bc_dataset_bundled(struct BcDataset **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` valid writable storage.
 */
enum BcStatus bc_dataset_load(const char *path, struct BcDataset **out);

/**
 * # Safety
 * `d` must be null or a live dataset handle.
 */
size_t bc_dataset_len(const struct BcDataset *d);

/**
 * # Safety
 * `d` must be null or a live dataset handle.
 */
void bc_dataset_free(struct BcDataset *d);

/**
 * Monte-Carlo estimate of the log posterior at `params` (lambda, zeta, nu,
 * eta, then sigma_q, sigma_w for the gaussian model) under the default
 * prior. `max_draws` caps the per-record sample size.
 *
 * # Safety
 * `d` must be a live dataset, `params` must hold `len` doubles and `out`
 * must be valid writable storage.
 */
enum BcStatus bc_log_posterior(const struct BcDataset *d,
                               enum BcResidualModel model,
                               const double *params,
                               size_t len,
                               uint64_t seed,
                               size_t initial_draws,
                               size_t max_draws,
                               double *out);

/**
 * Loads a prediction case JSON file; it must carry an erosion block.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` valid writable storage.
 */
enum BcStatus bc_prediction_case_load(const char *path, struct BcPredictionCase **out);

/**
 * # Safety
 * `c` must be null or a live prediction case handle.
 */
void bc_prediction_case_free(struct BcPredictionCase *c);

/**
 * Latin Hypercube ensemble of `n` forward runs.
 *
 * # Safety
 * `c` must be a live prediction case and `out` valid writable storage.
 */
enum BcStatus bc_predict(const struct BcPredictionCase *c,
                         size_t n,
                         uint64_t seed,
                         struct BcEnsemble **out);

/**
 * # Safety
 * `e` must be a live ensemble and `out` valid writable storage.
 */
enum BcStatus bc_ensemble_counts(const struct BcEnsemble *e, struct BcEnsembleCounts *out);

/**
 * Peak discharge of every member in index order; failed members give NaN.
 *
 * # Safety
 * `buf` must hold `len` doubles, with `len` equal to the member count.
 */
enum BcStatus bc_ensemble_peaks(const struct BcEnsemble *e, double *buf, size_t len);

/**
 * Writes `members.csv`, `bands.csv` and `summary.json` into `dir`.
 *
 * # Safety
 * `e` must be a live ensemble and `dir` a NUL-terminated string.
 */
enum BcStatus bc_ensemble_write(const struct BcEnsemble *e, const char *dir);

/**
 * # Safety
 * `e` must be null or a live ensemble handle.
 */
void bc_ensemble_free(struct BcEnsemble *e);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BREACHCAST_H */
