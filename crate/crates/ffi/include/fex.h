/* Generated by cbindgen. Do not edit. */

#ifndef FEX_H
#define FEX_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by all entry points.
 */
typedef enum FexStatus {
  FEX_STATUS_OK = 0,
  FEX_STATUS_NULL_POINTER = 1,
  FEX_STATUS_INVALID_ARGUMENT = 2,
  FEX_STATUS_CONFIG = 3,
  FEX_STATUS_DOMAIN = 4,
  FEX_STATUS_NUMERIC = 5,
  FEX_STATUS_IO = 6,
  FEX_STATUS_CHECKPOINT = 7,
  FEX_STATUS_EMPTY_POOL = 8,
  FEX_STATUS_PANIC = 9,
} FexStatus;

/**
 * Expression with fixed parameters.
 */
typedef struct FexExpression FexExpression;

/**
 * PDE benchmark problem.
 */
typedef struct FexProblem FexProblem;

/**
 * Fitted one-dimensional TN operator.
 */
typedef struct FexTnOperator FexTnOperator;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or an empty string.
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *fex_last_error_message(void);

/**
 * Frees a string returned by this library.
 *
 * # Safety
 * `s` must come from this library or be null.
 */
void fex_string_free(char *s);

/**
 * Fits `TN[tag]` on `[lo, hi]` with `neurons` hidden units, shape `gamma` and
 * `samples` fit points.
 *
 * # Safety
 * `tag` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FexStatus fex_tn_build(const char *tag,
                            double lo,
                            double hi,
                            size_t neurons,
                            double gamma,
                            size_t samples,
                            uint64_t seed,
                            struct FexTnOperator **out);

/**
 * Writes `[f, f', f'', f''']` at `y` into `derivs_out` (4 doubles).
 *
 * # Safety
 * `op` must come from [`fex_tn_build`]; `derivs_out` must hold 4 doubles.
 */
enum FexStatus fex_tn_derivs(const struct FexTnOperator *op, double y, double *derivs_out);

/**
 * Sup-norm fit error measured after fitting.
 *
 * # Safety
 * `op` must come from [`fex_tn_build`]; `out` must be valid.
 */
enum FexStatus fex_tn_fit_sup_error(const struct FexTnOperator *op, double *out);

/**
 * # Safety
 * `op` must come from [`fex_tn_build`] or be null.
 */
void fex_tn_free(struct FexTnOperator *op);

/**
 * Loads an expression from its JSON export. Accepts either a bare
 * expression record or a `best_expression.json` file body.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FexStatus fex_expression_from_json(const char *json, struct FexExpression **out);

/**
 * # Safety
 * `expr` must come from this library; `out` must be valid.
 */
enum FexStatus fex_expression_dim(const struct FexExpression *expr, size_t *out);

/**
 * Value at the point `x` of length `len`.
 *
 * # Safety
 * `x` must hold `len` doubles; `expr` and `value` must be valid.
 */
enum FexStatus fex_expression_eval(const struct FexExpression *expr,
                                   const double *x,
                                   size_t len,
                                   double *value);

/**
 * Value, gradient (`len` doubles) and Laplacian at `x`.
 *
 * # Safety
 * `x` and `grad` must hold `len` doubles; the other pointers must be valid.
 */
enum FexStatus fex_expression_jet(const struct FexExpression *expr,
                                  const double *x,
                                  size_t len,
                                  double *value,
                                  double *grad,
                                  double *lap);

/**
 * Human-readable form with `precision` decimals. Free with [`fex_string_free`].
 *
 * # Safety
 * `expr` and `out` must be valid.
 */
enum FexStatus fex_expression_render(const struct FexExpression *expr,
                                     size_t precision,
                                     char **out);

/**
 * # Safety
 * `expr` must come from this library or be null.
 */
void fex_expression_free(struct FexExpression *expr);

/**
 * Creates a named benchmark problem. `dim == 0` keeps the default dimension.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FexStatus fex_problem_new(const char *name, size_t dim, struct FexProblem **out);

/**
 * # Safety
 * `problem` and `out` must be valid.
 */
enum FexStatus fex_problem_dim(const struct FexProblem *problem, size_t *out);

/**
 * Exact solution at `x`.
 *
 * # Safety
 * `x` must hold `len` doubles; `problem` and `out` must be valid.
 */
enum FexStatus fex_problem_true_value(const struct FexProblem *problem,
                                      const double *x,
                                      size_t len,
                                      double *out);

/**
 * Right-hand side `f` at `x`.
 *
 * # Safety
 * `x` must hold `len` doubles; `problem` and `out` must be valid.
 */
enum FexStatus fex_problem_rhs(const struct FexProblem *problem,
                               const double *x,
                               size_t len,
                               double *out);

/**
 * # Safety
 * `problem` must come from this library or be null.
 */
void fex_problem_free(struct FexProblem *problem);

/**
 * Monte Carlo relative L² error of `expr` against the exact solution,
 * averaged over `repeats` batches of `points` interior samples.
 *
 * # Safety
 * All pointers must be valid.
 */
enum FexStatus fex_relative_l2(const struct FexProblem *problem,
                               const struct FexExpression *expr,
                               size_t points,
                               size_t repeats,
                               uint64_t seed,
                               double *mean,
                               double *std);

/**
 * Runs a full search from a JSON run configuration and returns the best
 * fine-tuned expression and its loss. `run_dir` may be null, in which case
 * nothing is written to disk.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; `run_dir` must be null or
 * NUL-terminated; `best_out` and `loss_out` must be valid.
 */
enum FexStatus fex_solve(const char *config_json,
                         const char *run_dir,
                         struct FexExpression **best_out,
                         double *loss_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FEX_H */
