#ifndef SWARMBT_H
#define SWARMBT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Number of metric streams per frame.
 */
#define SBT_STREAM_COUNT 9

typedef enum SbtBetaRule {
  SBT_BETA_RULE_CLOSER_THAN_MEAN = 0,
  SBT_BETA_RULE_FARTHER_THAN_MEAN = 1,
} SbtBetaRule;

typedef enum SbtStatus {
  SBT_STATUS_OK = 0,
  SBT_STATUS_NULL_POINTER = 1,
  SBT_STATUS_INVALID_ARGUMENT = 2,
  SBT_STATUS_PARSE = 3,
  SBT_STATUS_CAPACITY = 4,
  SBT_STATUS_IO = 5,
  SBT_STATUS_TRAJECTORY = 6,
  SBT_STATUS_LENGTH_MISMATCH = 7,
  SBT_STATUS_PANIC = 8,
} SbtStatus;

/**
 * Opaque extraction result.
 */
typedef struct SbtExtraction SbtExtraction;

/**
 * Opaque metric series.
 */
typedef struct SbtMetrics SbtMetrics;

/**
 * Opaque trajectory.
 */
typedef struct SbtTrajectory SbtTrajectory;

/**
 * Opaque behavior tree.
 */
typedef struct SbtTree SbtTree;

typedef struct SbtArenaConfig {
  double side_length;
  size_t agent_count;
  double agent_radius;
  double sensing_range;
  double speed;
  double dt;
  size_t steps;
} SbtArenaConfig;

typedef struct SbtEvolutionConfig {
  size_t population_size;
  size_t generations;
  size_t elitism_size;
  size_t tournament_size;
  double crossover_rate;
  double mutation_rate;
  size_t leaf_count;
  uint64_t seed;
} SbtEvolutionConfig;

typedef struct SbtMetricParams {
  double density_radius;
  enum SbtBetaRule beta_rule;
} SbtMetricParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null if none. Owned by the library.
 */
const char *sbt_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void sbt_string_free(char *s);

struct SbtArenaConfig sbt_arena_config_default(void);

struct SbtEvolutionConfig sbt_evolution_config_default(void);

struct SbtMetricParams sbt_metric_params_default(void);

/**
 * Parses `seq(a,b,...)`.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum SbtStatus sbt_tree_parse(const char *text, struct SbtTree **out);

/**
 * Draws a uniform tree of `leaf_count` leaves; `constrained` rejects canceling pairs.
 *
 * # Safety
 * `out` must be writable.
 */
enum SbtStatus sbt_tree_random(size_t leaf_count,
                               uint64_t seed,
                               bool constrained,
                               struct SbtTree **out);

/**
 * Canonical string form; release with [`sbt_string_free`].
 *
 * # Safety
 * `tree` must be a live handle; `out` must be writable.
 */
enum SbtStatus sbt_tree_to_string(const struct SbtTree *tree, char **out);

/**
 * Number of leaves, or 0 for null.
 *
 * # Safety
 * `tree` must be null or a live handle.
 */
size_t sbt_tree_len(const struct SbtTree *tree);

/**
 * # Safety
 * `tree` must be null or a live handle; it is invalid afterwards.
 */
void sbt_tree_free(struct SbtTree *tree);

/**
 * Token-set Jaccard similarity of two trees.
 *
 * # Safety
 * `a` and `b` must be live handles; `out` must be writable.
 */
enum SbtStatus sbt_jaccard(const struct SbtTree *a, const struct SbtTree *b, double *out);

/**
 * Places agents and runs `tree` for `config->steps` steps, all from `seed`.
 *
 * # Safety
 * `tree` and `config` must be valid; `out` must be writable.
 */
enum SbtStatus sbt_simulate(const struct SbtTree *tree,
                            const struct SbtArenaConfig *config,
                            uint64_t seed,
                            struct SbtTrajectory **out);

/**
 * Reads a `t,agent,x,y` CSV. `config` supplies the arena geometry.
 *
 * # Safety
 * `path` must be NUL-terminated; `config` valid; `out` writable.
 */
enum SbtStatus sbt_trajectory_read_csv(const char *path,
                                       const struct SbtArenaConfig *config,
                                       struct SbtTrajectory **out);

/**
 * # Safety
 * `traj` must be a live handle; `path` NUL-terminated.
 */
enum SbtStatus sbt_trajectory_write_csv(const struct SbtTrajectory *traj, const char *path);

/**
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t sbt_trajectory_frame_count(const struct SbtTrajectory *traj);

/**
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t sbt_trajectory_agent_count(const struct SbtTrajectory *traj);

/**
 * Position of `agent` at `frame`.
 *
 * # Safety
 * `traj` must be a live handle; `x` and `y` writable.
 */
enum SbtStatus sbt_trajectory_position(const struct SbtTrajectory *traj,
                                       size_t frame,
                                       size_t agent,
                                       double *x,
                                       double *y);

/**
 * # Safety
 * `traj` must be null or a live handle; it is invalid afterwards.
 */
void sbt_trajectory_free(struct SbtTrajectory *traj);

/**
 * # Safety
 * `traj` and `params` must be valid; `out` writable.
 */
enum SbtStatus sbt_metrics_compute(const struct SbtTrajectory *traj,
                                   const struct SbtMetricParams *params,
                                   struct SbtMetrics **out);

/**
 * Frames per stream, or 0 for null.
 *
 * # Safety
 * `metrics` must be null or a live handle.
 */
size_t sbt_metrics_len(const struct SbtMetrics *metrics);

/**
 * Copies stream `index` (0..SBT_STREAM_COUNT) into `buf`, which must hold `sbt_metrics_len` values.
 *
 * # Safety
 * `metrics` must be a live handle; `buf` must have room for `capacity` doubles.
 */
enum SbtStatus sbt_metrics_stream(const struct SbtMetrics *metrics,
                                  size_t index,
                                  double *buf,
                                  size_t capacity);

/**
 * # Safety
 * `metrics` must be null or a live handle; it is invalid afterwards.
 */
void sbt_metrics_free(struct SbtMetrics *metrics);

/**
 * Runs the full evolutionary extraction against an observed trajectory.
 *
 * # Safety
 * All pointers must be valid; `out` writable.
 */
enum SbtStatus sbt_extract(const struct SbtTrajectory *observation,
                           const struct SbtEvolutionConfig *config,
                           const struct SbtMetricParams *params,
                           struct SbtExtraction **out);

/**
 * Copies the best tree into a new handle.
 *
 * # Safety
 * `ex` must be a live handle; `out` writable.
 */
enum SbtStatus sbt_extraction_best_tree(const struct SbtExtraction *ex, struct SbtTree **out);

/**
 * Best fitness found, or NaN for null.
 *
 * # Safety
 * `ex` must be null or a live handle.
 */
double sbt_extraction_best_fitness(const struct SbtExtraction *ex);

/**
 * One entry per generation, starting at generation 0; 0 for null.
 *
 * # Safety
 * `ex` must be null or a live handle.
 */
size_t sbt_extraction_history_len(const struct SbtExtraction *ex);

/**
 * # Safety
 * `ex` must be a live handle; `best` and `mean` writable.
 */
enum SbtStatus sbt_extraction_history_at(const struct SbtExtraction *ex,
                                         size_t generation,
                                         double *best,
                                         double *mean);

/**
 * # Safety
 * `ex` must be null or a live handle; it is invalid afterwards.
 */
void sbt_extraction_free(struct SbtExtraction *ex);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SWARMBT_H */
