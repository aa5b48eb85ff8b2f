#ifndef MIXMNL_H
#define MIXMNL_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MnlStatus {
  MNL_STATUS_OK = 0,
  MNL_STATUS_NULL_POINTER = 1,
  MNL_STATUS_VALIDATION = 2,
  MNL_STATUS_NUMERICAL = 3,
  MNL_STATUS_IO = 4,
  MNL_STATUS_PANIC = 5,
} MnlStatus;

typedef struct MnlBatch MnlBatch;

typedef struct MnlEstimate MnlEstimate;

typedef struct MnlGraph MnlGraph;

typedef struct MnlModel MnlModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *mnl_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mnl_version(void);

/**
 * Connected, non-bipartite G(n, p) graph with expected degree `dbar`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum MnlStatus mnl_graph_erdos_renyi(size_t n, double dbar, uint64_t seed, struct MnlGraph **out);

/**
 * Graph from `num_edges` pairs stored flat as `[i0, j0, i1, j1, ...]`.
 *
 * # Safety
 * `pairs` must point to `2 * num_edges` readable values and `out` to
 * writable storage for one handle.
 */
enum MnlStatus mnl_graph_from_edges(size_t n,
                                    const size_t *pairs,
                                    size_t num_edges,
                                    struct MnlGraph **out);

/**
 * Number of items, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live graph handle.
 */
size_t mnl_graph_num_items(const struct MnlGraph *g);

/**
 * Number of edges, or 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live graph handle.
 */
size_t mnl_graph_num_edges(const struct MnlGraph *g);

/**
 * Spectral gap of the random-walk transition matrix.
 *
 * # Safety
 * `g` must be a live graph handle and `out` writable.
 */
enum MnlStatus mnl_graph_spectral_gap(const struct MnlGraph *g, double *out);

/**
 * # Safety
 * `g` must be null or a handle not yet freed.
 */
void mnl_graph_free(struct MnlGraph *g);

/**
 * Mixture of `r` components over `n` items. `weights` is row-major `r × n`.
 * Both weights and `q` are normalized.
 *
 * # Safety
 * `weights` must hold `r * n` values, `q` must hold `r`, `out` writable.
 */
enum MnlStatus mnl_model_new(size_t n,
                             size_t r,
                             const double *weights,
                             const double *q,
                             struct MnlModel **out);

/**
 * # Safety
 * `m` must be null or a handle not yet freed.
 */
void mnl_model_free(struct MnlModel *m);

/**
 * Draws `count` observations of `ell` distinct pairs each.
 *
 * # Safety
 * `m` and `g` must be live handles and `out` writable.
 */
enum MnlStatus mnl_batch_sample(const struct MnlModel *m,
                                const struct MnlGraph *g,
                                size_t ell,
                                size_t count,
                                uint64_t seed,
                                struct MnlBatch **out);

/**
 * Number of observations, or 0 for a null handle.
 *
 * # Safety
 * `b` must be null or a live batch handle.
 */
size_t mnl_batch_len(const struct MnlBatch *b);

/**
 * # Safety
 * `b` must be null or a handle not yet freed.
 */
void mnl_batch_free(struct MnlBatch *b);

/**
 * Learns an `r`-component mixture. Pass 0 for `t1` or `t2` to use the
 * defaults.
 *
 * # Safety
 * `b` and `g` must be live handles and `out` writable.
 */
enum MnlStatus mnl_learn(const struct MnlBatch *b,
                         const struct MnlGraph *g,
                         size_t r,
                         size_t t1,
                         size_t t2,
                         uint64_t seed,
                         struct MnlEstimate **out);

/**
 * Number of components, or 0 for a null handle.
 *
 * # Safety
 * `e` must be null or a live estimate handle.
 */
size_t mnl_estimate_num_components(const struct MnlEstimate *e);

/**
 * Copies the `r` estimated mixing probabilities into `dst`.
 *
 * # Safety
 * `e` must be a live handle and `dst` must hold `len` values.
 */
enum MnlStatus mnl_estimate_q(const struct MnlEstimate *e, double *dst, size_t len);

/**
 * Copies the `n` weights of component `a` into `dst`.
 *
 * # Safety
 * `e` must be a live handle and `dst` must hold `len` values.
 */
enum MnlStatus mnl_estimate_weights(const struct MnlEstimate *e, size_t a, double *dst, size_t len);

/**
 * Estimates and diagnostics as JSON. Release with [`mnl_string_free`].
 *
 * # Safety
 * `e` must be a live handle and `out` writable.
 */
enum MnlStatus mnl_estimate_to_json(const struct MnlEstimate *e, char **out);

/**
 * # Safety
 * `e` must be null or a handle not yet freed.
 */
void mnl_estimate_free(struct MnlEstimate *e);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void mnl_string_free(char *s);

/**
 * Stationary distribution of the comparison chain built from per-edge
 * expected outcomes `p` (one per edge, in edge order, clamped to [-1, 1]).
 * Pass 0 for `t2` to choose the iteration count adaptively.
 *
 * # Safety
 * `g` must be a live handle, `p` must hold `num_edges` values and `dst`
 * must hold `n` values.
 */
enum MnlStatus mnl_rank_centrality(const struct MnlGraph *g,
                                   const double *p,
                                   size_t num_edges,
                                   size_t t2,
                                   double *dst,
                                   size_t n);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MIXMNL_H */
