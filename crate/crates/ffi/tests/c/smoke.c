#include <stdio.h>
#include <string.h>

#include "bartvs.h"

#define CHECK(call)                                                          \
    do {                                                                     \
        BvStatus s_ = (call);                                                \
        if (s_ != BV_STATUS_OK) {                                            \
            fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_,                \
                    bv_last_error_message());                                \
            return 1;                                                        \
        }                                                                    \
    } while (0)

int main(void) {
    enum { N = 120, P = 4 };
    double x[N * P];
    double y[N];
    unsigned state = 7;
    for (int i = 0; i < N; i++) {
        for (int j = 0; j < P; j++) {
            state = state * 1103515245u + 12345u;
            x[i * P + j] = (double)((state >> 8) % 10000) / 10000.0;
        }
        y[i] = 8.0 * x[i * P];
    }

    BvDataset *data = NULL;
    CHECK(bv_dataset_new(x, y, N, P, &data));
    if (bv_dataset_n(data) != N || bv_dataset_p(data) != P) return 2;

    BvFitOptions fo = bv_fit_options_default();
    fo.n_trees = 10;
    fo.burn_in = 100;
    fo.n_draws = 100;
    fo.record_mi = true;
    BvTrace *trace = NULL;
    CHECK(bv_fit(data, &fo, &trace));
    double imp[P];
    CHECK(bv_trace_importance(trace, BV_IMPORTANCE_KIND_VIP, imp, P));
    double total = 0.0;
    for (int j = 0; j < P; j++) total += imp[j];
    if (total < 0.999 || total > 1.001) return 3;
    if (bv_trace_importance(trace, BV_IMPORTANCE_KIND_VIP, imp, 1) !=
        BV_STATUS_BUFFER_TOO_SMALL)
        return 4;

    BvSelection *sel = NULL;
    if (bv_select(data, "no-such-method", NULL, &sel) != BV_STATUS_USAGE) return 5;
    if (strstr(bv_last_error_message(), "no-such-method") == NULL) return 6;

    BvSelectOptions so = bv_select_options_default();
    so.n_trees = 10;
    so.burn_in = 100;
    so.n_draws = 100;
    so.l_rep = 2;
    CHECK(bv_select(data, "dart-mpm", &so, &sel));
    size_t k = bv_selection_count(sel);
    size_t idx[P];
    CHECK(bv_selection_indices(sel, idx, P));
    char *json = NULL;
    CHECK(bv_selection_to_json(sel, &json));
    if (strstr(json, "\"schema_version\"") == NULL) return 7;
    printf("selected %zu feature(s), first %zu\n", k, k ? idx[0] : (size_t)-1);

    bv_string_free(json);
    bv_selection_free(sel);
    bv_trace_free(trace);
    bv_dataset_free(data);
    return 0;
}
