#include <stdio.h>
#include "bdnoma.h"

int main(void) {
    BdnProfile p = bdn_profile_default();
    BdnInstance *inst = NULL;
    if (bdn_instance_sample(&p, 0, &inst) != BDN_ERROR_OK) return 10;
    size_t m = bdn_instance_antennas(inst);
    if (m != 4) return 11;

    BdnReport *rep = NULL;
    if (bdn_solve_noma(inst, 1.0, 0.1, 0.1, 0, &rep) != BDN_ERROR_OK) return 12;
    BdnSolveStatus status;
    double r_b = 0.0;
    bdn_report_status(rep, &status);
    bdn_report_r_b(rep, &r_b);
    if (status != BDN_SOLVE_STATUS_CONVERGED || !(r_b > 0.0)) return 13;

    BdnComplex w_c[4], w_e[4];
    if (bdn_report_beams(rep, w_c, w_e, 2) != BDN_ERROR_BUFFER_TOO_SMALL) return 14;
    if (bdn_report_beams(rep, w_c, w_e, m) != BDN_ERROR_OK) return 15;
    double power = 0.0;
    for (size_t i = 0; i < m; i++) {
        power += w_c[i].re * w_c[i].re + w_c[i].im * w_c[i].im;
        power += w_e[i].re * w_e[i].re + w_e[i].im * w_e[i].im;
    }
    if (!(power > 0.0 && power <= 1000.0 * (1.0 + 1e-6))) return 16;

    if (bdn_solve_noma(NULL, 1.0, 0.1, 0.1, 0, &rep) != BDN_ERROR_NULL_POINTER) return 17;
    if (bdn_last_error_message()[0] == '\0') return 18;

    printf("r_b=%.6f power=%.3f\n", r_b, power);
    bdn_report_free(rep);
    bdn_instance_free(inst);
    return 0;
}
