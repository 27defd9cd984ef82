/* Minimal consumer of the tideprob C API: synthesize a tide, derive datums,
 * build a windowed exceedance CCDF, and compose a hazard probability.
 *
 * Build (from the workspace root, after `cargo build -p tideprob-ffi`):
 *   cc crates/ffi/examples/c/demo.c -Icrates/ffi/include \
 *      -Ltarget/debug -ltideprob_ffi -lpthread -ldl -lm -o demo
 */

#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "tideprob.h"

#define CHECK(call)                                                        \
  do {                                                                     \
    tideprob_status status_ = (call);                                      \
    if (status_ != TIDEPROB_OK) {                                          \
      fprintf(stderr, "%s failed (%d): %s\n", #call, (int)status_,         \
              tideprob_last_error_message());                              \
      return 1;                                                            \
    }                                                                      \
  } while (0)

int main(void) {
  /* A 12-hour, 1 m tide for ten days. */
  tideprob_constituent cons[1] = {{1.0, 30.0, 0.0}};
  tideprob_tide *tide = NULL;
  CHECK(tideprob_tide_synthesize(cons, 1, 10.0, 0.0, &tide));
  printf("record: %zu minutes\n", tideprob_tide_len(tide));

  tideprob_datums datums;
  CHECK(tideprob_tide_datums(tide, &datums));
  printf("datums: MHHW %.3f, MLLW %.3f, sigma0 %.3f\n", datums.xi_mhhw,
         datums.xi_mllw, datums.sigma0);
  if (fabs(datums.xi_mhhw - 1.0) > 1e-3) return 1;

  tideprob_bins bins;
  CHECK(tideprob_bins_for_tide(tide, 0.0, 0.01, &bins));

  tideprob_ccdf *phi = NULL;
  CHECK(tideprob_phi_dt(tide, 72, bins, &phi));
  double p_half;
  CHECK(tideprob_ccdf_eval(phi, 0.5, &p_half));
  printf("P[windowed tide > 0.5 m] = %.4f\n", p_half);
  if (fabs(p_half - (acos(0.5) / M_PI + 0.1)) > 0.01) return 1;

  /* Hazard probability for a monotone three-run response. */
  double stages[3] = {-1.0, 0.0, 1.0};
  double qois[3] = {0.5, 2.0, 3.5};
  tideprob_response *response = NULL;
  CHECK(tideprob_response_new(-124.18, 41.74, -5.0, stages, qois, 3, 0, 0,
                              false, 0.0, &response));
  double levels[3] = {0.5, 2.0, 3.0};
  double probs[3];
  CHECK(tideprob_psi(response, phi, levels, 3, 0, -1.0, 1.0, probs));
  printf("P[QoI > 2.0 m] = %.4f\n", probs[1]);
  if (probs[0] != 1.0) return 1;

  /* Closed-form moments from the shipped site constants. */
  tideprob_g_params gp = tideprob_g_params_crescent_city();
  tideprob_datums cc = {-1.13, -0.75, 0.0, 0.77, 0.97, -1.83, 1.5, 0.638};
  double xi0, sigma;
  CHECK(tideprob_mofjeld_moments(3.92, &gp, &cc, &xi0, &sigma));
  printf("closed form at A=3.92: xi0 %.3f, sigma %.3f\n", xi0, sigma);
  if (fabs(xi0 - 0.45) > 0.01 || fabs(sigma - 0.34) > 0.01) return 1;

  tideprob_response_free(response);
  tideprob_ccdf_free(phi);
  tideprob_tide_free(tide);
  puts("demo ok");
  return 0;
}
