#ifndef SQG_H
#define SQG_H

/* Generated by cbindgen from the sqg-ffi sources; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SqgStatus {
  SQG_STATUS_OK = 0,
  SQG_STATUS_NULL_POINTER = 1,
  SQG_STATUS_INVALID_ARGUMENT = 2,
  SQG_STATUS_SOLVER_FAILURE = 3,
  SQG_STATUS_IO_FAILURE = 4,
  SQG_STATUS_PARSE_FAILURE = 5,
  // The run finished but at least one check failed.
  SQG_STATUS_CHECKS_FAILED = 6,
  SQG_STATUS_PANIC = 7,
} SqgStatus;

// A scalar field on a periodic grid.
typedef struct SqgField SqgField;

// A time stepper holding its state.
typedef struct SqgSolver SqgSolver;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copy the calling thread's last error message into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length in bytes, 0 when
// there is none.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t sqg_last_error_message(char *buf, size_t len);

// Release a string returned by this library.
//
// # Safety
// `s` must come from this library and not be freed twice.
void sqg_string_free(char *s);

// Field from `n × n` row-major values (`values[j*n + i]` at `(i h, j h)`)
// on a torus of side `side_length`.
//
// # Safety
// `values` must be valid for `n*n` reads and `out` for one write.
enum SqgStatus sqg_field_new(size_t n,
                             double side_length,
                             const double *values,
                             double time,
                             struct SqgField **out);

// `sin(x₁)` on the `n`-point 2π grid.
//
// # Safety
// `out` must be valid for one write.
enum SqgStatus sqg_field_single_mode(size_t n, struct SqgField **out);

// # Safety
// `field` must be null or a live handle.
void sqg_field_free(struct SqgField *field);

// Grid size, 0 for a null handle.
//
// # Safety
// `field` must be null or a live handle.
size_t sqg_field_n(const struct SqgField *field);

// # Safety
// `field` must be null or a live handle.
double sqg_field_time(const struct SqgField *field);

// Copy the `n*n` values into `out`; `len` must be at least `n*n`.
//
// # Safety
// `field` must be a live handle and `out` valid for `len` writes.
enum SqgStatus sqg_field_values(const struct SqgField *field, double *out, size_t len);

// Solver for `∂ₜθ + w·∇θ + Λ^α θ = 0` from `initial` with step `dt`.
// `t_end` is recorded in the configuration; [`sqg_solver_advance`] is not
// limited by it.
//
// # Safety
// `initial` must be a live handle and `out` valid for one write.
enum SqgStatus sqg_solver_new(const struct SqgField *initial,
                              double alpha,
                              double dt,
                              double t_end,
                              struct SqgSolver **out);

// # Safety
// `solver` must be null or a live handle.
void sqg_solver_free(struct SqgSolver *solver);

// Advance by `span` in equal steps no longer than `dt`.
//
// # Safety
// `solver` must be a live handle.
enum SqgStatus sqg_solver_advance(struct SqgSolver *solver, double span);

// # Safety
// `solver` must be null or a live handle.
double sqg_solver_time(const struct SqgSolver *solver);

// Current state as a new field handle.
//
// # Safety
// `solver` must be a live handle and `out` valid for one write.
enum SqgStatus sqg_solver_state(const struct SqgSolver *solver, struct SqgField **out);

// # Safety
// `path` must be a NUL-terminated string and `field` a live handle.
enum SqgStatus sqg_checkpoint_write(const char *path, double alpha, const struct SqgField *field);

// # Safety
// `path` must be a NUL-terminated string; `alpha` and `out` valid for one
// write each.
enum SqgStatus sqg_checkpoint_read(const char *path, double *alpha, struct SqgField **out);

// Run a simulation from config text (`key = value` lines) and return the
// JSON report through `report_json` (free with [`sqg_string_free`]).
// Returns `SQG_STATUS_CHECKS_FAILED` with the report set when a check
// fails.
//
// # Safety
// `config` must be a NUL-terminated string and `report_json` valid for
// one write.
enum SqgStatus sqg_simulate(const char *config, char **report_json);

// Largest admissible `ρ` for velocity bounds `l`, `c`.
//
// # Safety
// `out` must be valid for one write.
enum SqgStatus sqg_choose_rho(double l, double c, double alpha, double *out);

// Largest admissible `δ` for `ρ` and measured improvement `eta`.
//
// # Safety
// `out` must be valid for one write.
enum SqgStatus sqg_choose_delta(double rho, double eta, double *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* SQG_H */
