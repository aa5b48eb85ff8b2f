/* Learns a two-component mixture through the C interface. */
#include <stdio.h>
#include <stdlib.h>

#include "mixmnl.h"

static int check(enum MnlStatus s, const char *what) {
    if (s != MNL_STATUS_OK) {
        fprintf(stderr, "%s failed (%d): %s\n", what, (int)s, mnl_last_error());
        return 1;
    }
    return 0;
}

int main(void) {
    MnlGraph *g = NULL;
    MnlModel *m = NULL;
    MnlBatch *b = NULL;
    MnlEstimate *e = NULL;
    char *json = NULL;
    int rc = 1;

    const double w[12] = {1, 2, 4, 8, 16, 32, 8, 1, 32, 2, 16, 4};
    const double q[2] = {0.35, 0.65};
    size_t pairs[30];
    size_t k = 0;
    for (size_t i = 0; i < 6; i++)
        for (size_t j = i + 1; j < 6; j++) {
            pairs[k++] = i;
            pairs[k++] = j;
        }

    if (check(mnl_graph_from_edges(6, pairs, 15, &g), "graph")) goto done;
    if (check(mnl_model_new(6, 2, w, q, &m), "model")) goto done;
    if (check(mnl_batch_sample(m, g, 5, 200000, 7, &b), "sample")) goto done;
    if (check(mnl_learn(b, g, 2, 0, 0, 1, &e), "learn")) goto done;

    double qh[2];
    if (check(mnl_estimate_q(e, qh, 2), "q")) goto done;
    printf("q_hat = %.3f %.3f\n", qh[0], qh[1]);
    if (check(mnl_estimate_to_json(e, &json), "json")) goto done;
    printf("json bytes = %zu\n", (size_t)snprintf(NULL, 0, "%s", json));

    /* A bad handle is reported, not crashed on. */
    if (mnl_learn(NULL, g, 2, 0, 0, 1, &e) != MNL_STATUS_NULL_POINTER) goto done;
    rc = 0;

done:
    mnl_string_free(json);
    mnl_estimate_free(e);
    mnl_batch_free(b);
    mnl_model_free(m);
    mnl_graph_free(g);
    return rc;
}
