#ifndef ACTATTR_H
#define ACTATTR_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ActattrStatus {
  ACTATTR_STATUS_OK = 0,
  ACTATTR_STATUS_NULL_POINTER = 1,
  ACTATTR_STATUS_INVALID_ARGUMENT = 2,
  ACTATTR_STATUS_DIMENSION_MISMATCH = 3,
  ACTATTR_STATUS_IO = 4,
  ACTATTR_STATUS_PARSE = 5,
  ACTATTR_STATUS_DEGENERATE = 6,
  ACTATTR_STATUS_PANIC = 7,
} ActattrStatus;

typedef enum ActattrMatchMode {
  ACTATTR_MATCH_MODE_LITERAL = 0,
  ACTATTR_MATCH_MODE_SYNONYM = 1,
} ActattrMatchMode;

typedef enum ActattrWeighting {
  ACTATTR_WEIGHTING_FREQ = 0,
  ACTATTR_WEIGHTING_TFIDF = 1,
} ActattrWeighting;

typedef enum ActattrAlgorithm {
  ACTATTR_ALGORITHM_NAIVE = 0,
  ACTATTR_ALGORITHM_DISTANCE_TRANSFORM = 1,
} ActattrAlgorithm;

/**
 * kNN graph over sequence features, used for label propagation.
 */
typedef struct ActattrGraph ActattrGraph;

/**
 * Tree of body parts with Gaussian pairwise terms.
 */
typedef struct ActattrPartGraph ActattrPartGraph;

/**
 * Attribute × interval score matrix of one video.
 */
typedef struct ActattrScores ActattrScores;

/**
 * Composite × attribute weight matrix.
 */
typedef struct ActattrWeights ActattrWeights;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a successful one.
 *
 * The pointer stays valid until the next call into the library on the same thread.
 */
const char *actattr_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *actattr_version(void);

/**
 * Reads a weight matrix CSV (`composite,<attribute>...`).
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ActattrStatus actattr_weights_load_csv(const char *path, struct ActattrWeights **out);

/**
 * Mines L1-normalized weights from a script directory with one sub-directory per scenario.
 *
 * `lexicon` may be null.
 *
 * # Safety
 * Paths must be NUL-terminated strings and `out` a valid pointer.
 */
enum ActattrStatus actattr_weights_mine(const char *scripts_dir,
                                        const char *vocab,
                                        const char *lexicon,
                                        enum ActattrMatchMode match_mode,
                                        enum ActattrWeighting weighting,
                                        struct ActattrWeights **out);

/**
 * Wraps a row-major `rows × cols` buffer. Rows are labelled `c<k>`, columns `a<k>`.
 *
 * # Safety
 * `values` must point to `rows * cols` doubles and `out` be a valid pointer.
 */
enum ActattrStatus actattr_weights_from_values(size_t rows,
                                               size_t cols,
                                               const double *values,
                                               struct ActattrWeights **out);

/**
 * # Safety
 * `w` must come from this library; `rows` and `cols` must be valid pointers.
 */
enum ActattrStatus actattr_weights_shape(const struct ActattrWeights *w,
                                         size_t *rows,
                                         size_t *cols);

/**
 * Copies the matrix row-major into `buf`, which must hold exactly `rows * cols` values.
 *
 * # Safety
 * `w` must come from this library and `buf` point to `len` writable doubles.
 */
enum ActattrStatus actattr_weights_copy(const struct ActattrWeights *w, double *buf, size_t len);

/**
 * # Safety
 * `w` must come from this library or be null, and must not be used afterwards.
 */
void actattr_weights_free(struct ActattrWeights *w);

/**
 * Wraps a row-major `n × t` attribute score buffer.
 *
 * # Safety
 * `values` must point to `n * t` doubles and `out` be a valid pointer.
 */
enum ActattrStatus actattr_scores_from_values(size_t n,
                                              size_t t,
                                              const double *values,
                                              struct ActattrScores **out);

/**
 * Reads a score matrix CSV.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ActattrStatus actattr_scores_load_csv(const char *path, struct ActattrScores **out);

/**
 * # Safety
 * `s` must come from this library; `n` and `t` must be valid pointers.
 */
enum ActattrStatus actattr_scores_shape(const struct ActattrScores *s, size_t *n, size_t *t);

/**
 * Max over intervals for every attribute; `buf` must hold `n` values.
 *
 * # Safety
 * `s` must come from this library and `buf` point to `len` writable doubles.
 */
enum ActattrStatus actattr_scores_pool_max(const struct ActattrScores *s, double *buf, size_t len);

/**
 * # Safety
 * `s` must come from this library or be null, and must not be used afterwards.
 */
void actattr_scores_free(struct ActattrScores *s);

/**
 * Zero-shot composite scores `Σ_i w_{z,i} g_i` of a pooled feature `g`.
 *
 * # Safety
 * `g` must point to `g_len` doubles and `out` to `out_len` writable doubles.
 */
enum ActattrStatus actattr_script_scores(const struct ActattrWeights *w,
                                         const double *g,
                                         size_t g_len,
                                         double *out,
                                         size_t out_len);

/**
 * Builds a symmetric kNN graph over `d` sequence features of length `dim` (row-major).
 *
 * `squared_kernel` selects `exp(−‖a − b‖² / 2σ²)` edges instead of the default kernel.
 *
 * # Safety
 * `features` must point to `d * dim` doubles and `out` be a valid pointer.
 */
enum ActattrStatus actattr_graph_build(const double *features,
                                       size_t d,
                                       size_t dim,
                                       size_t k,
                                       bool squared_kernel,
                                       struct ActattrGraph **out);

/**
 * # Safety
 * `g` must come from this library and `n` be a valid pointer.
 */
enum ActattrStatus actattr_graph_nodes(const struct ActattrGraph *g, size_t *n);

/**
 * Propagates `z` rows of initial scores (row-major `z × n`) over the graph.
 *
 * `out` receives the converged `z × n` scores; `iterations` may be null.
 *
 * # Safety
 * `init` must point to `z * n` doubles and `out` to as many writable ones.
 */
enum ActattrStatus actattr_graph_propagate(const struct ActattrGraph *g,
                                           const double *init,
                                           size_t z,
                                           double alpha,
                                           double *out,
                                           size_t out_len,
                                           size_t *iterations);

/**
 * # Safety
 * `g` must come from this library or be null, and must not be used afterwards.
 */
void actattr_graph_free(struct ActattrGraph *g);

/**
 * The ten-part upper-body model.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum ActattrStatus actattr_part_graph_upper_body(struct ActattrPartGraph **out);

/**
 * Reads a part graph from JSON.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ActattrStatus actattr_part_graph_load(const char *path, struct ActattrPartGraph **out);

/**
 * # Safety
 * `g` must come from this library and `parts` be a valid pointer.
 */
enum ActattrStatus actattr_part_graph_len(const struct ActattrPartGraph *g, size_t *parts);

/**
 * # Safety
 * `g` must come from this library or be null, and must not be used afterwards.
 */
void actattr_part_graph_free(struct ActattrPartGraph *g);

/**
 * Joint MAP placement. `grids` holds one `h × w` likelihood grid per part in graph order.
 *
 * `xs` and `ys` receive one coordinate per part; `log_score` may be null.
 *
 * # Safety
 * `grids` must point to `parts * h * w` doubles; `xs` and `ys` to `parts` writable entries.
 */
enum ActattrStatus actattr_pose_infer_map(const struct ActattrPartGraph *g,
                                          const double *grids,
                                          size_t h,
                                          size_t w,
                                          enum ActattrAlgorithm algo,
                                          size_t *xs,
                                          size_t *ys,
                                          double *log_score);

/**
 * Posterior marginals per part, written like the input grids.
 *
 * # Safety
 * `grids` must point to `parts * h * w` doubles and `out` to `out_len` writable ones.
 */
enum ActattrStatus actattr_pose_infer_marginals(const struct ActattrPartGraph *g,
                                                const double *grids,
                                                size_t h,
                                                size_t w,
                                                enum ActattrAlgorithm algo,
                                                double *out,
                                                size_t out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ACTATTR_H */
