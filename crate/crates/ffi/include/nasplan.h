#ifndef NASPLAN_H
#define NASPLAN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NasStatus {
  NAS_STATUS_OK = 0,
  NAS_STATUS_NULL_ARGUMENT = 1,
  NAS_STATUS_INVALID_ARGUMENT = 2,
  NAS_STATUS_IO = 3,
  NAS_STATUS_INVALID_INPUT = 4,
  NAS_STATUS_NODE_BUDGET = 5,
  NAS_STATUS_NO_SOLUTION = 6,
  NAS_STATUS_PANIC = 7,
} NasStatus;

typedef enum NasEffector {
  NAS_EFFECTOR_LEFT = 0,
  NAS_EFFECTOR_RIGHT = 1,
} NasEffector;

typedef enum NasObjective {
  NAS_OBJECTIVE_FEASIBILITY = 0,
  NAS_OBJECTIVE_MIN_STEP_LENGTH = 1,
} NasObjective;

typedef enum NasSolveStatus {
  NAS_SOLVE_STATUS_FEASIBLE = 0,
  NAS_SOLVE_STATUS_MARGINAL = 1,
  NAS_SOLVE_STATUS_INFEASIBLE = 2,
} NasSolveStatus;

/**
 * Footstep positions from a start point to the goal.
 */
typedef struct NasFootstepPlan NasFootstepPlan;

/**
 * A problem instance: scene, kinematics, goal.
 */
typedef struct NasInstance NasInstance;

/**
 * A feasibility tree with its instance and spatial index.
 */
typedef struct NasTree NasTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call into this library from the same thread.
 */
const char *nas_last_error(void);

/**
 * Reads an instance from a JSON file.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` a valid pointer.
 */
enum NasStatus nas_instance_load(const char *path, struct NasInstance **out);

/**
 * Parses an instance from JSON text.
 *
 * # Safety
 * `json` must be a nul-terminated string and `out` a valid pointer.
 */
enum NasStatus nas_instance_parse(const char *json, struct NasInstance **out);

/**
 * # Safety
 * `instance` must come from `nas_instance_load` or `nas_instance_parse`, or
 * be null.
 */
void nas_instance_free(struct NasInstance *instance);

/**
 * Builds a tree over `max_steps` steps (0 keeps the instance's value).
 * `node_budget` 0 means the library default.
 *
 * # Safety
 * `instance` must be a live handle and `out` a valid pointer.
 */
enum NasStatus nas_tree_build(const struct NasInstance *instance,
                              size_t max_steps,
                              bool merge,
                              size_t node_budget,
                              struct NasTree **out);

/**
 * Reads a tree file written by `nas_tree_save` or the command line tool.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` a valid pointer.
 */
enum NasStatus nas_tree_load(const char *path, struct NasTree **out);

/**
 * # Safety
 * `tree` must be a live handle and `path` a nul-terminated string.
 */
enum NasStatus nas_tree_save(const struct NasTree *tree, const char *path);

/**
 * # Safety
 * `tree` must come from `nas_tree_build` or `nas_tree_load`, or be null.
 */
void nas_tree_free(struct NasTree *tree);

/**
 * Total number of nodes, 0 for a null handle.
 *
 * # Safety
 * `tree` must be a live handle or null.
 */
size_t nas_tree_node_count(const struct NasTree *tree);

/**
 * Number of layers (steps + 1), 0 for a null handle.
 *
 * # Safety
 * `tree` must be a live handle or null.
 */
size_t nas_tree_layer_count(const struct NasTree *tree);

/**
 * Nodes at `depth`, 0 past the last layer.
 *
 * # Safety
 * `tree` must be a live handle or null.
 */
size_t nas_tree_layer_size(const struct NasTree *tree, size_t depth);

/**
 * Marks every node on `surface` impassable. `invalidated` (may be null)
 * receives the number of nodes affected.
 *
 * # Safety
 * `tree` must be a live handle not used concurrently; `invalidated` must be
 * valid or null.
 */
enum NasStatus nas_tree_invalidate_surface(struct NasTree *tree,
                                           uint32_t surface,
                                           size_t *invalidated);

/**
 * Fewest steps from `point` (3 doubles) for `effector` to the goal,
 * skipping invalidated surfaces. `NAS_STATUS_NO_SOLUTION` if none.
 *
 * # Safety
 * `tree` must be a live handle, `point` must hold 3 doubles and `steps` be
 * a valid pointer.
 */
enum NasStatus nas_tree_query(const struct NasTree *tree,
                              const double *point,
                              enum NasEffector effector,
                              size_t *steps);

/**
 * Footstep positions along the shallowest valid plan from `point`.
 * `horizon` 0 optimizes the whole plan. An infeasible program still
 * returns a plan handle; check `nas_plan_status`.
 *
 * # Safety
 * `tree` must be a live handle, `point` must hold 3 doubles and `out` be a
 * valid pointer.
 */
enum NasStatus nas_tree_plan(const struct NasTree *tree,
                             const double *point,
                             enum NasEffector effector,
                             size_t horizon,
                             enum NasObjective objective,
                             struct NasFootstepPlan **out);

/**
 * # Safety
 * `plan` must come from `nas_tree_plan`, or be null.
 */
void nas_plan_free(struct NasFootstepPlan *plan);

/**
 * Number of positions, the start included.
 *
 * # Safety
 * `plan` must be a live handle or null.
 */
size_t nas_plan_len(const struct NasFootstepPlan *plan);

/**
 * Position `i` (0 is the start) into `xyz` (3 doubles) and its foot.
 *
 * # Safety
 * `plan` must be a live handle, `xyz` must hold 3 doubles, `effector` must
 * be valid or null.
 */
enum NasStatus nas_plan_position(const struct NasFootstepPlan *plan,
                                 size_t i,
                                 double *xyz,
                                 enum NasEffector *effector);

/**
 * # Safety
 * `plan` must be a live handle.
 */
enum NasSolveStatus nas_plan_status(const struct NasFootstepPlan *plan);

/**
 * Largest constraint violation of the positions, NaN for a null handle.
 *
 * # Safety
 * `plan` must be a live handle or null.
 */
double nas_plan_max_violation(const struct NasFootstepPlan *plan);

/**
 * # Safety
 * `plan` must be a live handle or null.
 */
double nas_plan_objective(const struct NasFootstepPlan *plan);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NASPLAN_H */
