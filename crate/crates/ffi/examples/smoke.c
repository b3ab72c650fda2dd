#include <stdio.h>

#include "vise.h"

int main(void) {
    double m = 0.0;
    ViseStatus s = vise_expected_increment_exact(-0.5, 1.0, 21, 0.5, &m);
    if (s != VISE_STATUS_OK) {
        char msg[256];
        vise_last_error_message(msg, sizeof msg);
        fprintf(stderr, "%s: %s\n", vise_status_string(s), msg);
        return 1;
    }
    printf("M(rho=-0.5, n=21, alpha=0.5) = %.10f\n", m);

    ViseSimulation *sim = NULL;
    if (vise_simulation_new(0.0, 1.0, 21, 0.5, 10000, 20, 7, &sim) != VISE_STATUS_OK) {
        return 1;
    }
    ViseSimulationSummary sum;
    s = vise_simulation_run(sim, &sum);
    vise_simulation_free(sim);
    if (s != VISE_STATUS_OK) {
        return 1;
    }
    printf("mc = %.6f +- %.6f, acceptance = %.4f\n", sum.mean_step_increment, sum.std_error,
           sum.acceptance_rate);
    return 0;
}
