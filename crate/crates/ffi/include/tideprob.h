/* C API for the tideprob library: tidal-stage uncertainty for probabilistic
 * tsunami hazard assessment.
 *
 * Conventions:
 *   - Every fallible function returns tideprob_status; TIDEPROB_OK is 0.
 *     Results come back through out-pointers.
 *   - On failure, tideprob_last_error_message() describes the problem. The
 *     message is thread-local and stays valid until the next failing call
 *     on the same thread.
 *   - Handle types are opaque. Create them through this API, share freely
 *     across threads for reads, and free each exactly once.
 *
 * Link against libtideprob_ffi (static or shared). The static library also
 * needs the usual Rust runtime libraries: -lpthread -ldl -lm.
 */

#ifndef TIDEPROB_H
#define TIDEPROB_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tideprob_status {
  TIDEPROB_OK = 0,
  TIDEPROB_ERR_NULL_ARG = 1,
  TIDEPROB_ERR_UTF8 = 2,
  TIDEPROB_ERR_IO = 3,
  TIDEPROB_ERR_INVALID = 4,
  TIDEPROB_ERR_PANIC = 5,
} tideprob_status;

/* Opaque handles. */
typedef struct tideprob_tide tideprob_tide;
typedef struct tideprob_pattern tideprob_pattern;
typedef struct tideprob_ccdf tideprob_ccdf;
typedef struct tideprob_response tideprob_response;

/* Site datums, meters relative to mean sea level. */
typedef struct tideprob_datums {
  double xi_mllw;
  double xi_mlw;
  double xi_msl;
  double xi_mhw;
  double xi_mhhw;
  double xi_lowest;
  double xi_highest;
  double sigma0;
} tideprob_datums;

/* Gaussian-method site constants. */
typedef struct tideprob_g_params {
  double sigma0;
  double alpha;
  double beta;
  double c;
  double alpha_prime;
  double beta_prime;
  double c_prime;
  double xi_ref;
  double subsidence;
  uint32_t t_g_minutes;
  double period_minutes;
  double efold_minutes;
} tideprob_g_params;

/* Uniform stage binning: left edges at origin + i * width. */
typedef struct tideprob_bins {
  double origin;
  double width;
  size_t n_bins;
} tideprob_bins;

/* One harmonic constituent:
 * level(t) = amplitude * cos(speed * t + phase), t in hours, degrees. */
typedef struct tideprob_constituent {
  double amplitude_m;
  double speed_deg_per_hr;
  double phase_deg;
} tideprob_constituent;

const char *tideprob_last_error_message(void);

tideprob_g_params tideprob_g_params_crescent_city(void);

/* ---- tide records ---------------------------------------------------- */

/* Ingest a `timestamp,level_m` CSV. Gaps up to gap_max_minutes are filled
 * by linear interpolation; pass a negative value to reject any gap. */
tideprob_status tideprob_tide_from_csv(const char *path, int64_t gap_max_minutes,
                                       bool rebase, tideprob_tide **out);

tideprob_status tideprob_tide_synthesize(const tideprob_constituent *constituents,
                                         size_t n_constituents, double duration_days,
                                         double msl_offset_m, tideprob_tide **out);

size_t tideprob_tide_len(const tideprob_tide *tide);

/* Copy the level series; len must equal tideprob_tide_len(tide). */
tideprob_status tideprob_tide_levels(const tideprob_tide *tide, double *out, size_t len);

tideprob_status tideprob_tide_datums(const tideprob_tide *tide, tideprob_datums *out);

void tideprob_tide_free(tideprob_tide *tide);

/* ---- binning --------------------------------------------------------- */

/* Bins spanning [lo - max_offset - width, hi + width]. */
tideprob_status tideprob_bins_covering(double lo, double hi, double max_offset,
                                       double width, tideprob_bins *out);

tideprob_status tideprob_bins_for_tide(const tideprob_tide *tide, double max_offset,
                                       double width, tideprob_bins *out);

/* ---- wave patterns ---------------------------------------------------- */

tideprob_status tideprob_pattern_from_json_file(const char *path,
                                                tideprob_pattern **out);

/* The shipped AASZe02 reference pattern (7 waves, 396 minutes). */
tideprob_status tideprob_pattern_reference_aasze02(tideprob_pattern **out);

/* Reduce a gauge series to square waves. width_rule: 0 half-amplitude,
 * 1 full thresholded run. */
tideprob_status tideprob_pattern_extract(const double *minutes, const double *eta,
                                         size_t len, double run_stage,
                                         double threshold_fraction,
                                         double min_gap_minutes, int32_t width_rule,
                                         tideprob_pattern **out);

uint32_t tideprob_pattern_duration(const tideprob_pattern *pattern);
size_t tideprob_pattern_wave_count(const tideprob_pattern *pattern);
double tideprob_pattern_max_offset(const tideprob_pattern *pattern);

/* Contiguous window width covering the tallest wave and every wave within
 * near_equal_margin of its height. */
uint32_t tideprob_pattern_recommend_dt(const tideprob_pattern *pattern,
                                       double near_equal_margin);

void tideprob_pattern_free(tideprob_pattern *pattern);

/* ---- exceedance CCDFs -------------------------------------------------- */

tideprob_status tideprob_phi0(const tideprob_tide *tide, tideprob_bins bins,
                              tideprob_ccdf **out);

tideprob_status tideprob_phi_dt(const tideprob_tide *tide, uint32_t dt_minutes,
                                tideprob_bins bins, tideprob_ccdf **out);

tideprob_status tideprob_phi_pattern(const tideprob_tide *tide,
                                     const tideprob_pattern *pattern,
                                     tideprob_bins bins, tideprob_ccdf **out);

tideprob_status tideprob_phi_g_direct(const tideprob_tide *tide, double amplitude_m,
                                      const tideprob_g_params *gp, tideprob_bins bins,
                                      tideprob_ccdf **out);

tideprob_status tideprob_phi_from_moments(double xi0, double sigma, tideprob_bins bins,
                                          tideprob_ccdf **out);

tideprob_status tideprob_mofjeld_moments(double amplitude_m, const tideprob_g_params *gp,
                                         const tideprob_datums *datums, double *xi0_out,
                                         double *sigma_out);

/* Gaussian CCDF value (1 - erf((xi - xi0) / (sqrt(2) sigma))) / 2. */
tideprob_status tideprob_phi_erf(double xi_hat, double xi0, double sigma, double *out);

/* Step CCDF of an unbounded window: 1 below the highest observable stage,
 * else 0. Returns NaN when datums is NULL. */
double tideprob_phi_infinity(double xi_hat, const tideprob_datums *datums);

tideprob_status tideprob_ccdf_eval(const tideprob_ccdf *ccdf, double xi_hat, double *out);

tideprob_status tideprob_ccdf_moments(const tideprob_ccdf *ccdf, double *xi0_out,
                                      double *sigma_out);

size_t tideprob_ccdf_n_bins(const tideprob_ccdf *ccdf);
uint64_t tideprob_ccdf_n_windows(const tideprob_ccdf *ccdf);

/* Copy bin left edges, CCDF values, and densities. len must equal
 * tideprob_ccdf_n_bins(ccdf); any destination may be NULL to skip it. */
tideprob_status tideprob_ccdf_values(const tideprob_ccdf *ccdf, double *edges_out,
                                     double *phi_out, double *pdf_out, size_t len);

void tideprob_ccdf_free(tideprob_ccdf *ccdf);

/* ---- stage responses and hazard -------------------------------------- */

/* mode: 0 piecewise-linear (n >= 2), 1 slope-one (n >= 1, anchored at the
 * highest stage). extrapolation: 0 linear continuation, 1 clamp. The floor
 * applies only when has_floor is true (piecewise mode only). */
tideprob_status tideprob_response_new(double lon, double lat, double bathy_m,
                                      const double *stages, const double *qois, size_t n,
                                      int32_t mode, int32_t extrapolation, bool has_floor,
                                      double floor, tideprob_response **out);

tideprob_status tideprob_response_eval(const tideprob_response *response, double stage,
                                       double *out);

/* Lowest stage in [domain_lo, domain_hi] above which the response exceeds
 * qoi_level; the result may be +/- infinity. */
tideprob_status tideprob_response_inverse(const tideprob_response *response,
                                          double qoi_level, double domain_lo,
                                          double domain_hi, double *out);

/* Exceedance probabilities at n_levels ascending nonnegative levels.
 * mode: 0 infimum, 1 interval sum. probabilities_out must hold n_levels
 * doubles. */
tideprob_status tideprob_psi(const tideprob_response *response, const tideprob_ccdf *ccdf,
                             const double *levels, size_t n_levels, int32_t mode,
                             double domain_lo, double domain_hi,
                             double *probabilities_out);

void tideprob_response_free(tideprob_response *response);

#ifdef __cplusplus
}
#endif

#endif /* TIDEPROB_H */
