#ifndef BARTVS_H
#define BARTVS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BvStatus {
    BV_STATUS_OK = 0,
    BV_STATUS_NULL_POINTER = 1,
    BV_STATUS_INVALID_ARGUMENT = 2,
    BV_STATUS_USAGE = 3,
    BV_STATUS_DATA = 4,
    BV_STATUS_NUMERIC = 5,
    BV_STATUS_MI_UNAVAILABLE = 6,
    BV_STATUS_IO = 7,
    BV_STATUS_PARSE = 8,
    BV_STATUS_BUFFER_TOO_SMALL = 9,
    BV_STATUS_PANIC = 10,
} BvStatus;

typedef enum BvImportanceKind {
    BV_IMPORTANCE_KIND_VIP = 0,
    BV_IMPORTANCE_KIND_VC = 1,
    BV_IMPORTANCE_KIND_MPVIP = 2,
    BV_IMPORTANCE_KIND_MI = 3,
} BvImportanceKind;

typedef struct BvDataset BvDataset;

typedef struct BvSelection BvSelection;

typedef struct BvTrace BvTrace;

/*
 Sampler settings for `bv_fit`. Obtain defaults from
 `bv_fit_options_default` and override fields as needed.
 */
typedef struct BvFitOptions {
    size_t n_trees;
    size_t burn_in;
    size_t n_draws;
    uint64_t seed;
    /*
     Use the sparse Dirichlet split prior.
     */
    bool dart;
    /*
     Keep per-node acceptance probabilities (needed for MI).
     */
    bool record_mi;
} BvFitOptions;

/*
 Settings for `bv_select`. `l_rep == 0` selects the method's default.
 */
typedef struct BvSelectOptions {
    size_t n_trees;
    size_t burn_in;
    size_t n_draws;
    size_t l_rep;
    size_t l_perm;
    double alpha;
    uint64_t seed;
} BvSelectOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or NULL. The pointer
 stays valid until the next failing call on the same thread.
 */
const char *bv_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *bv_version(void);

/*
 Builds a dataset from a row-major `n x p` feature matrix and a response
 of length `n`. The buffers are copied.

 # Safety
 `x` must point to `n * p` doubles, `y` to `n` doubles, and `out` must be
 a valid pointer.
 */
enum BvStatus bv_dataset_new(const double *x,
                             const double *y,
                             size_t n,
                             size_t p,
                             struct BvDataset **out);

/*
 Reads a headed CSV; `response` names the response column.

 # Safety
 `path` and `response` must be NUL-terminated strings; `out` must be valid.
 */
enum BvStatus bv_dataset_read_csv(const char *path, const char *response, struct BvDataset **out);

/*
 Records the known relevant features (0-based) so selections report
 TPR/FPR/F1.

 # Safety
 `data` must be a live dataset handle and `idx` must point to `len` values.
 */
enum BvStatus bv_dataset_set_truth(struct BvDataset *data, const size_t *idx, size_t len);

/*
 # Safety
 `data` must be a live dataset handle.
 */
size_t bv_dataset_n(const struct BvDataset *data);

/*
 # Safety
 `data` must be a live dataset handle.
 */
size_t bv_dataset_p(const struct BvDataset *data);

/*
 # Safety
 `data` must be NULL or a handle not yet freed.
 */
void bv_dataset_free(struct BvDataset *data);

struct BvFitOptions bv_fit_options_default(void);

/*
 Runs one sampler chain.

 # Safety
 `data` must be a live dataset handle; `options` may be NULL for defaults;
 `out` must be valid.
 */
enum BvStatus bv_fit(const struct BvDataset *data,
                     const struct BvFitOptions *options,
                     struct BvTrace **out);

/*
 # Safety
 `path` must be a NUL-terminated string; `out` must be valid.
 */
enum BvStatus bv_trace_load(const char *path, struct BvTrace **out);

/*
 # Safety
 `trace` must be a live trace handle; `path` a NUL-terminated string.
 */
enum BvStatus bv_trace_save(const struct BvTrace *trace, const char *path);

/*
 # Safety
 `trace` must be a live trace handle.
 */
size_t bv_trace_n_draws(const struct BvTrace *trace);

/*
 # Safety
 `trace` must be a live trace handle.
 */
size_t bv_trace_n_features(const struct BvTrace *trace);

/*
 Writes one importance value per feature into `out` (capacity `len`).

 # Safety
 `trace` must be a live trace handle; `out` must hold `len` doubles.
 */
enum BvStatus bv_trace_importance(const struct BvTrace *trace,
                                  enum BvImportanceKind kind,
                                  double *out,
                                  size_t len);

/*
 # Safety
 `trace` must be NULL or a handle not yet freed.
 */
void bv_trace_free(struct BvTrace *trace);

struct BvSelectOptions bv_select_options_default(void);

/*
 Runs a named selection method (for example `"dart-vc-measure"`).

 # Safety
 `data` must be a live dataset handle, `method` a NUL-terminated string,
 `options` NULL or valid, and `out` valid.
 */
enum BvStatus bv_select(const struct BvDataset *data,
                        const char *method,
                        const struct BvSelectOptions *options,
                        struct BvSelection **out);

/*
 # Safety
 `sel` must be a live selection handle.
 */
size_t bv_selection_count(const struct BvSelection *sel);

/*
 # Safety
 `sel` must be a live selection handle.
 */
size_t bv_selection_n_features(const struct BvSelection *sel);

/*
 Writes the selected feature indices (0-based, ascending) into `out`.

 # Safety
 `sel` must be a live selection handle; `out` must hold `len` values.
 */
enum BvStatus bv_selection_indices(const struct BvSelection *sel, size_t *out, size_t len);

/*
 Writes the per-feature importance the method ranked on.

 # Safety
 `sel` must be a live selection handle; `out` must hold `len` doubles.
 */
enum BvStatus bv_selection_importance(const struct BvSelection *sel, double *out, size_t len);

/*
 Serializes the full results document as JSON. Release the string with
 `bv_string_free`.

 # Safety
 `sel` must be a live selection handle; `out` must be valid.
 */
enum BvStatus bv_selection_to_json(const struct BvSelection *sel, char **out);

/*
 # Safety
 `sel` must be NULL or a handle not yet freed.
 */
void bv_selection_free(struct BvSelection *sel);

/*
 # Safety
 `s` must be NULL or a string returned by this library and not yet freed.
 */
void bv_string_free(char *s);

/*
 Whether a trace was fitted with the sparse Dirichlet prior.

 # Safety
 `trace` must be a live trace handle.
 */
bool bv_trace_is_dart(const struct BvTrace *trace);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BARTVS_H */
