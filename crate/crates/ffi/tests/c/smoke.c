#include <math.h>
#include <stdio.h>
#include "sqg.h"

int main(void) {
    SqgField *field = NULL;
    SqgSolver *solver = NULL;
    if (sqg_field_single_mode(32, &field) != SQG_STATUS_OK) return 1;
    if (sqg_solver_new(field, 1.0, 0.01, 0.2, &solver) != SQG_STATUS_OK) return 2;
    if (sqg_solver_advance(solver, 0.2) != SQG_STATUS_OK) return 3;
    double rho = 0.0;
    if (sqg_choose_rho(-1.0, 1.0, 0.9, &rho) != SQG_STATUS_INVALID_ARGUMENT) return 4;
    char msg[256];
    if (sqg_last_error_message(msg, sizeof msg) == 0) return 5;
    printf("t=%.3f\n", sqg_solver_time(solver));
    sqg_solver_free(solver);
    sqg_field_free(field);
    return isnan(sqg_solver_time(NULL)) ? 0 : 6;
}
