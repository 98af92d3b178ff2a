#ifndef TVCUT_H
#define TVCUT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Call outcome. Mirrors the CLI exit contract: 1 for usage errors,
 * 2 for numerical failures, 3 for non-convergence.
 */
typedef enum TvcutStatus {
  TVCUT_STATUS_OK = 0,
  TVCUT_STATUS_INVALID_ARGUMENT = 1,
  TVCUT_STATUS_NUMERICAL_FAILURE = 2,
  TVCUT_STATUS_NOT_CONVERGED = 3,
  TVCUT_STATUS_NULL_POINTER = 4,
  TVCUT_STATUS_DISCONNECTED = 5,
} TvcutStatus;

/**
 * Initialization of the descent.
 */
typedef enum TvcutInit {
  TVCUT_INIT_RANDOM = 0,
  TVCUT_INIT_SPECTRAL = 1,
} TvcutInit;

/**
 * How labels are read off the final signal.
 */
typedef enum TvcutThreshold {
  TVCUT_THRESHOLD_ZERO = 0,
  TVCUT_THRESHOLD_SWEEP = 1,
} TvcutThreshold;

/**
 * Opaque graph handle.
 */
typedef struct TvcutGraph TvcutGraph;

/**
 * Opaque clustering-run handle.
 */
typedef struct TvcutRun TvcutRun;

/**
 * Clustering-run options; fill with `tvcut_options_default` first.
 */
typedef struct TvcutOptions {
  double c;
  double outer_tol;
  double inner_tol;
  size_t max_outer_iter;
  size_t inner_max_iter;
  uint64_t seed;
  enum TvcutInit init;
  enum TvcutThreshold threshold;
  bool check_lemmas;
  /**
   * Accept disconnected graphs; the descent then stops at a zero-energy
   * component split.
   */
  bool allow_disconnected;
} TvcutOptions;

/**
 * One row of the convergence trace.
 */
typedef struct TvcutTraceRow {
  double energy;
  double increment;
  double prox_gap;
  double descent_slack;
} TvcutTraceRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread. Valid until
 * the next failing call; never null.
 */
const char *tvcut_last_error_message(void);

/**
 * Build a graph from `n_edges` undirected edges given as parallel arrays.
 *
 * # Safety
 * `src`, `dst`, `weights` must point to `n_edges` readable elements and
 * `out` must be a valid location for the handle.
 */
enum TvcutStatus tvcut_graph_from_edges(size_t n_vertices,
                                        const size_t *src,
                                        const size_t *dst,
                                        const double *weights,
                                        size_t n_edges,
                                        struct TvcutGraph **out);

/**
 * Build the self-tuning kNN graph of `n_points` points in row-major layout.
 *
 * # Safety
 * `points` must hold `n_points * dim` readable doubles; `out` must be a
 * valid location for the handle.
 */
enum TvcutStatus tvcut_graph_knn(const double *points,
                                 size_t n_points,
                                 size_t dim,
                                 size_t k,
                                 size_t self_tune_m,
                                 double universal_scale,
                                 struct TvcutGraph **out);

/**
 * # Safety
 * `g` must be a handle from this library, not yet freed, or null.
 */
void tvcut_graph_free(struct TvcutGraph *g);

/**
 * Vertex count; 0 for null.
 */
size_t tvcut_graph_vertex_count(const struct TvcutGraph *g);

/**
 * Stored undirected edge count; 0 for null.
 */
size_t tvcut_graph_edge_count(const struct TvcutGraph *g);

/**
 * # Safety
 * `g` must be a live graph handle and `out` writable.
 */
enum TvcutStatus tvcut_graph_is_connected(const struct TvcutGraph *g, bool *out);

/**
 * Fill `out` with the default options (c = 1/4, random init, zero split).
 *
 * # Safety
 * `out` must be writable.
 */
enum TvcutStatus tvcut_options_default(struct TvcutOptions *out);

/**
 * Run the descent clustering on `g`. On success (or bounded
 * non-convergence, status `NotConverged`) `out` receives a run handle.
 *
 * # Safety
 * `g` must be a live graph handle; `opts` and `out` valid pointers.
 */
enum TvcutStatus tvcut_cluster(const struct TvcutGraph *g,
                               const struct TvcutOptions *opts,
                               struct TvcutRun **out);

/**
 * # Safety
 * `r` must be a handle from `tvcut_cluster`, not yet freed, or null.
 */
void tvcut_run_free(struct TvcutRun *r);

/**
 * Final energy of the run; NaN for null.
 */
double tvcut_run_energy(const struct TvcutRun *r);

/**
 * Outer iterations executed; 0 for null.
 */
size_t tvcut_run_iterations(const struct TvcutRun *r);

bool tvcut_run_converged(const struct TvcutRun *r);

/**
 * Increment of the last step; NaN for null.
 */
double tvcut_run_critical_residual(const struct TvcutRun *r);

/**
 * Discrete ratio cut of the extracted partition; NaN for null.
 */
double tvcut_run_ratio_cut(const struct TvcutRun *r);

/**
 * Copy the 0/1 labels into `buf` (`len` must equal the vertex count).
 *
 * # Safety
 * `buf` must hold `len` writable bytes.
 */
enum TvcutStatus tvcut_run_labels(const struct TvcutRun *r, uint8_t *buf, size_t len);

/**
 * Copy the final unit-norm signal into `buf` (`len` = vertex count).
 *
 * # Safety
 * `buf` must hold `len` writable doubles.
 */
enum TvcutStatus tvcut_run_signal(const struct TvcutRun *r, double *buf, size_t len);

/**
 * Number of trace rows; 0 for null.
 */
size_t tvcut_run_trace_len(const struct TvcutRun *r);

/**
 * Fetch trace row `k`.
 *
 * # Safety
 * `out` must be writable.
 */
enum TvcutStatus tvcut_run_trace_row(const struct TvcutRun *r, size_t k, struct TvcutTraceRow *out);

/**
 * Ratio cut of an arbitrary 0/1 labeling of `g`.
 *
 * # Safety
 * `labels` must hold `len` readable bytes; `out` writable.
 */
enum TvcutStatus tvcut_ratio_cut_value(const struct TvcutGraph *g,
                                       const uint8_t *labels,
                                       size_t len,
                                       double *out);

/**
 * Relaxed energy T(f)/B(f) of an arbitrary signal on `g`.
 *
 * # Safety
 * `values` must hold `len` readable doubles; `out` writable.
 */
enum TvcutStatus tvcut_energy(const struct TvcutGraph *g,
                              const double *values,
                              size_t len,
                              double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TVCUT_H */
