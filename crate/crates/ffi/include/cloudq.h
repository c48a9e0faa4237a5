#ifndef CLOUDQ_H
#define CLOUDQ_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every call.
typedef enum CloudqStatus {
  CLOUDQ_STATUS_OK = 0,
  // A check ran but did not pass (`cloudq_run` only).
  CLOUDQ_STATUS_CHECK_FAILED = 1,
  CLOUDQ_STATUS_CONFIG = 2,
  CLOUDQ_STATUS_INVALID_PARAMETER = 3,
  CLOUDQ_STATUS_RESOURCE_LIMIT = 4,
  CLOUDQ_STATUS_INVALID_STATE = 5,
  CLOUDQ_STATUS_STEP_SIZE = 6,
  CLOUDQ_STATUS_FIXED_POINT = 7,
  CLOUDQ_STATUS_FIT = 8,
  CLOUDQ_STATUS_COST = 9,
  CLOUDQ_STATUS_IO = 10,
  CLOUDQ_STATUS_NULL_POINTER = 11,
  CLOUDQ_STATUS_INVALID_UTF8 = 12,
  CLOUDQ_STATUS_OVERFLOW = 13,
  CLOUDQ_STATUS_PANIC = 14,
} CloudqStatus;

// Piecewise arcsine approximation on `[0, 0.5]`.
typedef struct CloudqArcsine CloudqArcsine;

// Resource estimate of one case.
typedef struct CloudqReport CloudqReport;

// Explicit-Euler master-equation solver started from all mass in bin 1.
typedef struct CloudqSolver CloudqSolver;

// Totals of a report.
typedef struct CloudqTotals {
  uint64_t t_count;
  uint64_t t_depth;
  uint64_t logical_qubits;
  double eps_max;
} CloudqTotals;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Owned by the
// library and valid until the next call on this thread.
const char *cloudq_last_error_message(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void cloudq_string_free(char *s);

// Library version as a static string.
const char *cloudq_version(void);

// Runs a JSON run configuration as the command-line front-end would and
// returns the rendered output (`as_csv` selects CSV over JSON). Side files
// named in the configuration are written. Returns `CheckFailed` with the
// output still set when the run completed but a check did not pass.
//
// # Safety
// `config_json` must be a NUL-terminated string; `out` must be writable.
enum CloudqStatus cloudq_run(const char *config_json, bool as_csv, char **out);

// Estimates a built-in case (`paper-case-1` .. `paper-case-5`).
//
// # Safety
// `name` must be a NUL-terminated string; `out` must be writable.
enum CloudqStatus cloudq_report_from_preset(const char *name, struct CloudqReport **out);

// Estimates a case given as a JSON object with the estimation-case fields.
//
// # Safety
// `case_json` must be a NUL-terminated string; `out` must be writable.
enum CloudqStatus cloudq_report_from_json(const char *case_json, struct CloudqReport **out);

// Headline totals. Fails with `Overflow` if a count exceeds 64 bits.
//
// # Safety
// `report` must be a live handle; `out` must be writable.
enum CloudqStatus cloudq_report_totals(const struct CloudqReport *report, struct CloudqTotals *out);

// Full report as pretty-printed JSON; free with [`cloudq_string_free`].
//
// # Safety
// `report` must be a live handle; `out` must be writable.
enum CloudqStatus cloudq_report_to_json(const struct CloudqReport *report, char **out);

// # Safety
// `report` must be null or a handle not yet freed.
void cloudq_report_free(struct CloudqReport *report);

// Fits the fewest degree-`degree` pieces meeting `eps`; `grid` points per
// piece, 0 for the default.
//
// # Safety
// `out` must be writable.
enum CloudqStatus cloudq_arcsine_fit(uint32_t degree,
                                     double eps,
                                     size_t grid,
                                     struct CloudqArcsine **out);

// # Safety
// `fit` must be a live handle; outputs must be writable.
enum CloudqStatus cloudq_arcsine_info(const struct CloudqArcsine *fit,
                                      size_t *pieces,
                                      double *max_error);

// Evaluates the approximation at `x` in `[0, 0.5]`.
//
// # Safety
// `fit` must be a live handle; `out` must be writable.
enum CloudqStatus cloudq_arcsine_eval(const struct CloudqArcsine *fit, double x, double *out);

// # Safety
// `fit` must be null or a handle not yet freed.
void cloudq_arcsine_free(struct CloudqArcsine *fit);

// `kernel` is `constant:K0`, `sum:K0` or `product:K0`; null means `constant:1`.
//
// # Safety
// `kernel` must be null or a NUL-terminated string; `out` must be writable.
enum CloudqStatus cloudq_solver_new(uint32_t bins,
                                    const char *kernel,
                                    double dt,
                                    struct CloudqSolver **out);

// Advances `steps` time steps. On error the solver keeps its last valid step.
//
// # Safety
// `solver` must be a live handle.
enum CloudqStatus cloudq_solver_advance(struct CloudqSolver *solver, uint64_t steps);

// Current step index.
//
// # Safety
// `solver` must be a live handle; `out` must be writable.
enum CloudqStatus cloudq_solver_step(const struct CloudqSolver *solver, uint64_t *out);

// Expected droplet count of `bin` (1-based).
//
// # Safety
// `solver` must be a live handle; `out` must be writable.
enum CloudqStatus cloudq_solver_expected_count(const struct CloudqSolver *solver,
                                               uint32_t bin,
                                               double *out);

// Total probability, 1 up to rounding.
//
// # Safety
// `solver` must be a live handle; `out` must be writable.
enum CloudqStatus cloudq_solver_total(const struct CloudqSolver *solver, double *out);

// # Safety
// `solver` must be null or a handle not yet freed.
void cloudq_solver_free(struct CloudqSolver *solver);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CLOUDQ_H */
