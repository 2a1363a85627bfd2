/* Solves a 3x3 diagonal problem through the C ABI. Exits nonzero on failure. */
#include <math.h>
#include <stdio.h>

#include "spca.h"

static int check(SpcaStatus s, const char *what) {
    if (s != SPCA_STATUS_OK) {
        const char *msg = spca_last_error_message();
        fprintf(stderr, "%s failed (%d): %s\n", what, (int)s, msg ? msg : "?");
        return 1;
    }
    return 0;
}

int main(void) {
    const double a[9] = {1, 0, 0, 0, 3, 0, 0, 0, 2};
    SpcaMatrix *m = NULL;
    SpcaReport *r = NULL;
    SpcaSolveOptions opt;
    double f = 0, x[3] = {0};
    size_t n = 0, p = 0, count = 0;

    if (check(spca_matrix_from_dense(3, 3, a, &m), "from_dense")) return 1;
    if (check(spca_matrix_dims(m, &n, &p, NULL), "dims")) return 1;
    if (check(spca_solve_options_default(&opt), "options")) return 1;
    opt.formulation = 1;
    opt.param = 1;
    opt.starts = 8;
    opt.batch = 4;
    if (check(spca_solve(m, &opt, &r), "solve")) return 1;
    if (check(spca_report_best_objective(r, &f), "objective")) return 1;
    if (check(spca_report_best_loading(r, x, 3), "loading")) return 1;
    if (check(spca_report_start_count(r, &count), "count")) return 1;
    if (spca_report_best_loading(r, x, 2) != SPCA_STATUS_BUFFER_TOO_SMALL) return 2;
    if (spca_solve(NULL, &opt, &r) != SPCA_STATUS_NULL_POINTER) return 3;

    spca_report_free(r);
    spca_matrix_free(m);
    if (n != 3 || p != 3 || count != 8) return 4;
    if (fabs(f - 3.0) > 1e-9 || fabs(fabs(x[1]) - 1.0) > 1e-12) return 5;
    printf("ok %g\n", f);
    return 0;
}
