#ifndef ESSENTIAL_LAB_H
#define ESSENTIAL_LAB_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum ElStatus {
  EL_STATUS_OK = 0,
  EL_STATUS_NULL_POINTER = 1,
  EL_STATUS_INVALID_ARGUMENT = 2,
  EL_STATUS_RANK_DEFICIENT = 3,
  EL_STATUS_DEGENERATE_INPUT = 4,
  EL_STATUS_NUMERICAL_FAILURE = 5,
  EL_STATUS_IO = 6,
  EL_STATUS_PANIC = 7,
} ElStatus;

/**
 * Distribution selector for [`el_experiment_run`].
 */
typedef enum ElDistribution {
  EL_DISTRIBUTION_UNIF_G = 0,
  EL_DISTRIBUTION_PSI = 1,
  EL_DISTRIBUTION_BOX = 2,
} ElDistribution;

/**
 * Summary of a Monte Carlo experiment.
 */
typedef struct ElExperimentReport ElExperimentReport;

/**
 * A five-dimensional linear space of 3x3 matrices.
 */
typedef struct ElLinearSpace ElLinearSpace;

/**
 * Result of one five-point solve.
 */
typedef struct ElSolveResult ElSolveResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or NULL if none.
 * The string is owned by the caller and must be released with
 * [`el_string_free`].
 */
char *el_last_error_message(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library and not yet freed.
 */
void el_string_free(char *s);

/**
 * Library version as a static NUL-terminated string.
 */
const char *el_version(void);

/**
 * Creates a linear space from five row-major 3x3 matrices (45 doubles).
 *
 * # Safety
 * `rows` must point to 45 readable doubles and `out` to a writable handle slot.
 */
enum ElStatus el_linear_space_new(const double *rows, struct ElLinearSpace **out);

/**
 * Creates the linear space of matrices `E` with `u_i^T E v_i = 0` for five
 * correspondences given as 15 doubles each (`u_1, u_2, ...`).
 *
 * # Safety
 * `u` and `v` must point to 15 readable doubles and `out` to a writable handle slot.
 */
enum ElStatus el_linear_space_from_correspondences(const double *u,
                                                   const double *v,
                                                   struct ElLinearSpace **out);

/**
 * # Safety
 * `space` must be NULL or a handle from this library that has not been freed.
 */
void el_linear_space_free(struct ElLinearSpace *space);

/**
 * Solves the five-point problem on `space`.
 *
 * # Safety
 * `space` must be a live handle and `out` a writable handle slot.
 */
enum ElStatus el_solve(const struct ElLinearSpace *space,
                       uint64_t seed,
                       uint32_t retries,
                       struct ElSolveResult **out);

/**
 * Number of real solutions.
 *
 * # Safety
 * `result` must be a live handle and `count` writable.
 */
enum ElStatus el_solve_result_real_count(const struct ElSolveResult *result, uint32_t *count);

/**
 * Whether the solve gave up after all retries.
 *
 * # Safety
 * `result` must be a live handle and `failed` writable.
 */
enum ElStatus el_solve_result_failed(const struct ElSolveResult *result, bool *failed);

/**
 * Copies solution `index` as a row-major 3x3 matrix into `matrix` (9 doubles).
 *
 * # Safety
 * `result` must be a live handle and `matrix` must point to 9 writable doubles.
 */
enum ElStatus el_solve_result_solution(const struct ElSolveResult *result,
                                       uint32_t index,
                                       double *matrix);

/**
 * # Safety
 * `result` must be NULL or a handle from this library that has not been freed.
 */
void el_solve_result_free(struct ElSolveResult *result);

/**
 * Runs a Monte Carlo experiment. `boxes` is read only for
 * [`ElDistribution::Box`] and then holds 40 doubles `[a, b, c, d]` per point.
 *
 * # Safety
 * `boxes` must point to 40 readable doubles when the distribution is `Box`;
 * `out` must be a writable handle slot.
 */
enum ElStatus el_experiment_run(enum ElDistribution dist,
                                const double *boxes,
                                uint64_t n,
                                uint64_t seed,
                                uint32_t workers,
                                struct ElExperimentReport **out);

/**
 * Mean number of real solutions and its standard error.
 *
 * # Safety
 * `report` must be a live handle; `mean` and `std_error` writable.
 */
enum ElStatus el_experiment_mean(const struct ElExperimentReport *report,
                                 double *mean,
                                 double *std_error);

/**
 * Copies the 11 histogram bins (counts 0 through 10).
 *
 * # Safety
 * `report` must be a live handle and `bins` must point to 11 writable integers.
 */
enum ElStatus el_experiment_histogram(const struct ElExperimentReport *report, uint64_t *bins);

/**
 * The report as a JSON string, released with [`el_string_free`].
 *
 * # Safety
 * `report` must be a live handle and `json` a writable pointer slot.
 */
enum ElStatus el_experiment_to_json(const struct ElExperimentReport *report, char **json);

/**
 * # Safety
 * `report` must be NULL or a handle from this library that has not been freed.
 */
void el_experiment_free(struct ElExperimentReport *report);

/**
 * Runs the zonoid lower-bound pipeline with the default scales.
 *
 * # Safety
 * `bound` and `all_members` must be writable.
 */
enum ElStatus el_zonoid_lower_bound(uint32_t grid, double *bound, bool *all_members);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ESSENTIAL_LAB_H */
