#ifndef IPFEM_H
#define IPFEM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IpfemStatus {
  IPFEM_STATUS_OK = 0,
  IPFEM_STATUS_NULL_POINTER = 1,
  IPFEM_STATUS_INVALID_ARGUMENT = 2,
  IPFEM_STATUS_UNKNOWN_CASE = 3,
  IPFEM_STATUS_GEOMETRY = 4,
  IPFEM_STATUS_SINGULAR_MATRIX = 5,
  IPFEM_STATUS_CONVERGENCE_FAILURE = 6,
  IPFEM_STATUS_INACTIVE_EVALUATION = 7,
  IPFEM_STATUS_PANIC = 8,
  IPFEM_STATUS_INTERNAL = 9,
} IpfemStatus;

typedef enum IpfemMethod {
  IPFEM_METHOD_SIP = 0,
  IPFEM_METHOD_NIP = 1,
} IpfemMethod;

/**
 * Opaque run handle.
 */
typedef struct IpfemRun IpfemRun;

/**
 * Error norms of a run; `norm_b` is NaN when `gamma0 = 0`.
 */
typedef struct IpfemErrorReport {
  double l2;
  double h1_broken;
  double norm_a;
  double norm_b;
  double j0;
  double j1;
  double h;
  double gamma0;
  double gamma1;
  double residual;
  size_t dofs;
  size_t p;
} IpfemErrorReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Runs catalog case `case_name` with degree `p` on an `nx x nx` mesh.
 * Pass NaN for `gamma0` / `gamma1` to use the method's defaults. On
 * success `*out` receives a handle owned by the caller.
 *
 * # Safety
 * `case_name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum IpfemStatus ipfem_run_new(const char *case_name,
                               enum IpfemMethod method,
                               uint32_t p,
                               uint32_t nx,
                               double gamma0,
                               double gamma1,
                               struct IpfemRun **out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `run` must come from [`ipfem_run_new`] and not be used afterwards.
 */
void ipfem_run_free(struct IpfemRun *run);

/**
 * # Safety
 * `run` and `report` must be valid pointers.
 */
enum IpfemStatus ipfem_run_errors(const struct IpfemRun *run, struct IpfemErrorReport *report);

/**
 * Number of unknowns of the run, or 0 for a null handle.
 *
 * # Safety
 * `run` must be null or a valid handle.
 */
size_t ipfem_run_num_unknowns(const struct IpfemRun *run);

/**
 * Copies the solution coefficients into `buf`, which must hold at least
 * [`ipfem_run_num_unknowns`] values.
 *
 * # Safety
 * `buf` must point to `len` writable doubles.
 */
enum IpfemStatus ipfem_run_solution(const struct IpfemRun *run, double *buf, size_t len);

/**
 * Evaluates the discrete solution at `(x, y)` on side 1 or 2, or on the
 * side containing the point when `side = 0`. `grad` receives two values
 * and may be null.
 *
 * # Safety
 * `value` must be valid; `grad` null or valid for two doubles.
 */
enum IpfemStatus ipfem_run_evaluate(const struct IpfemRun *run,
                                    double x,
                                    double y,
                                    int32_t side,
                                    double *value,
                                    double *grad);

/**
 * Exact solution of the run's case at `(x, y)` on side 1 or 2.
 *
 * # Safety
 * `value` must be valid.
 */
enum IpfemStatus ipfem_run_exact(const struct IpfemRun *run,
                                 double x,
                                 double y,
                                 int32_t side,
                                 double *value);

/**
 * Message of the last failure on this thread; empty if none. Valid until
 * the next failing call on the same thread.
 */
const char *ipfem_last_error(void);

const char *ipfem_version(void);

size_t ipfem_case_count(void);

/**
 * Name of catalog case `index`, or null when out of range.
 */
const char *ipfem_case_name(size_t index);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IPFEM_H */
