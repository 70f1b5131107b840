/* C interface for the mimf relaxation toolkit.
 *
 * Conventions: every fallible call returns a MimfStatus; outputs are
 * written through out-pointers only on MIMF_OK. Strings returned by the
 * library must be released with mimf_string_free, handles with their
 * matching _free function. mimf_last_error_message returns a thread-local
 * description of the most recent failure (valid until the next failing
 * call on the same thread).
 */

#ifndef MIMF_H
#define MIMF_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum MimfStatus {
  MIMF_OK = 0,
  MIMF_ERR_NULL_POINTER = 1,
  MIMF_ERR_UTF8 = 2,
  MIMF_ERR_INVALID_ARGUMENT = 3,
  MIMF_ERR_PARSE = 4,
} MimfStatus;

typedef enum MimfFormulation {
  MIMF_FORMULATION_LAMBDA = 0,
  MIMF_FORMULATION_RMC = 1,
} MimfFormulation;

typedef enum MimfSolveStatus {
  MIMF_SOLVE_OPTIMAL = 0,
  MIMF_SOLVE_INFEASIBLE = 1,
  MIMF_SOLVE_UNBOUNDED = 2,
  MIMF_SOLVE_NODE_LIMIT = 3,
  MIMF_SOLVE_ITER_LIMIT = 4,
} MimfSolveStatus;

/* Opaque handles. */
typedef struct MimfInstance MimfInstance;
typedef struct MimfModel MimfModel;
typedef struct MimfSolveResult MimfSolveResult;

/* Diagnostics. */
const char *mimf_last_error_message(void);
void mimf_string_free(char *s);

/* Benchmark instances (demand = demand_factor * n). */
MimfStatus mimf_instance_generate(size_t n, size_t k, uint64_t seed,
                                  double demand_factor, MimfInstance **out);
MimfStatus mimf_instance_from_json(const char *json, MimfInstance **out);
MimfStatus mimf_instance_to_json(const MimfInstance *instance, char **out);
void mimf_instance_free(MimfInstance *instance);

/* Models. */
MimfStatus mimf_build_relaxation(const MimfInstance *instance,
                                 MimfFormulation formulation, MimfModel **out);
MimfStatus mimf_model_from_mps(const char *text, MimfModel **out);
MimfStatus mimf_model_to_mps(const MimfModel *model, char **out);
size_t mimf_model_num_variables(const MimfModel *model);
size_t mimf_model_num_constraints(const MimfModel *model);
void mimf_model_free(MimfModel *model);

/* Solving. node_limit 0 selects the default of 100000 nodes. */
MimfStatus mimf_solve_lp(const MimfModel *model, MimfSolveResult **out);
MimfStatus mimf_solve_milp(const MimfModel *model, uint64_t node_limit,
                           MimfSolveResult **out);

/* Result accessors. */
MimfSolveStatus mimf_result_status(const MimfSolveResult *result);
double mimf_result_objective(const MimfSolveResult *result);
double mimf_result_best_bound(const MimfSolveResult *result);
uint64_t mimf_result_bb_nodes(const MimfSolveResult *result);
uint64_t mimf_result_lp_iterations(const MimfSolveResult *result);
double mimf_result_wall_time(const MimfSolveResult *result);
size_t mimf_result_point_len(const MimfSolveResult *result);
MimfStatus mimf_result_point_copy(const MimfSolveResult *result, double *buffer,
                                  size_t len);
void mimf_result_free(MimfSolveResult *result);

/* LP gap in percent: (opt - lb) / opt * 100; NaN when opt is zero. */
double mimf_lp_gap(double opt, double lb);

#ifdef __cplusplus
}
#endif

#endif /* MIMF_H */
