#ifndef KAMTOOLS_KAMTOOLS_H
#define KAMTOOLS_KAMTOOLS_H

/* C interface to the kamtools core. Every function returns a kt_status;
 * KT_OK is zero. On failure kt_last_error() describes the error of the
 * calling thread. Strings returned through char** are malloc'ed and must be
 * released with kt_string_free. */

#include <stddef.h>

#if defined(_WIN32)
#define KT_API __declspec(dllexport)
#else
#define KT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum kt_status {
  KT_OK = 0,
  KT_ERR_INVALID_ARGUMENT = 1,
  KT_ERR_DEGENERATE_CONVERSION,
  KT_ERR_STEP_LIMIT_EXCEEDED,
  KT_ERR_INVALID_ETA,
  KT_ERR_DOMAIN,
  KT_ERR_NO_PEAK,
  KT_ERR_INSUFFICIENT_DATA,
  KT_ERR_INSUFFICIENT_SAMPLES,
  KT_ERR_BRACKET_INVALID,
  KT_ERR_BUDGET_EXCEEDED,
  KT_ERR_FLAT_DERIVATIVE,
  KT_ERR_MAX_ITER_EXCEEDED,
  KT_ERR_CONTEXT_MISMATCH,
  KT_ERR_INDEX_OUT_OF_RANGE,
  KT_ERR_NON_ADMISSIBLE_GENERATOR,
  KT_ERR_SMALL_DIVISOR,
  KT_ERR_DEGENERATE_TWIST,
  KT_ERR_NOT_QUADRATIC,
  KT_ERR_ZERO_BOUND,
  KT_ERR_IO,
  KT_ERR_NULL_POINTER = 100,
  KT_ERR_OUT_OF_MEMORY,
  KT_ERR_INTERNAL
} kt_status;

typedef enum kt_system {
  KT_SYSTEM_DISS_STD_MAP = 0,
  KT_SYSTEM_FORCED_PENDULUM = 1
} kt_system;

KT_API const char* kt_last_error(void);
KT_API const char* kt_status_name(kt_status status);
KT_API const char* kt_version(void);
KT_API void kt_string_free(char* s);

/* ---- dynamics ---- */

KT_API kt_status kt_std_map_step(double epsilon, double eta, double Omega, double* y,
                                 double* x);
/* One return to the section q2 = 0; (p1, q1) are updated in place. */
KT_API kt_status kt_poincare_map(double epsilon, double eta, double Omega, double* p1,
                                 double* q1);
KT_API kt_status kt_relaxation_count(double eta, int* count);

/* ---- frequency map explorer ---- */

typedef struct kt_scan_config {
  kt_system system;
  double epsilon;
  double eta;
  double Omega_min;
  double Omega_max;
  int n_points;
  int N; /* 0: default analysis length of the system */
  int has_target;
  double target_omega1;
  double start_action;
  double start_angle;
  int threads;
  /* Optional; when *cancel becomes nonzero the scan stops and keeps the
   * completed prefix of the grid. */
  const volatile int* cancel;
} kt_scan_config;

typedef struct kt_scan_sample {
  double Omega;
  double omega1;
  double amplitude;
  int relaxed;
  int plateau_suspect;
  int ok; /* 0 when the sample failed; omega1 is NaN then */
} kt_scan_sample;

typedef struct kt_scan kt_scan;

KT_API void kt_scan_config_init(kt_scan_config* cfg);
KT_API kt_status kt_scan_run(const kt_scan_config* cfg, kt_scan** out);
KT_API size_t kt_scan_count(const kt_scan* scan);
KT_API kt_status kt_scan_get(const kt_scan* scan, size_t i, kt_scan_sample* out);
KT_API kt_status kt_scan_to_csv(const kt_scan* scan, char** out);
KT_API void kt_scan_free(kt_scan* scan);

KT_API kt_status kt_measure_omega1(kt_system system, double epsilon, double eta, double Omega,
                                   int N, double start_action, double start_angle,
                                   double* omega1);

typedef struct kt_threshold_config {
  kt_system system;
  double omega1_star;
  double eta;
  double eps_lo;
  double eps_hi;
  double target_uncertainty;
  int probe_N;
  int full_N;
  int confirm;
  double window_halfwidth;
  int has_Omega_bracket;
  double Omega_lo;
  double Omega_hi;
  int max_widen;
  int max_probes;
  double start_action;
  double start_angle;
  int threads;
} kt_threshold_config;

typedef struct kt_threshold_summary {
  double eps_lo;
  double eps_hi;
  double eps_c;
  double uncertainty;
  size_t n_probes;
} kt_threshold_summary;

typedef struct kt_threshold kt_threshold;

KT_API void kt_threshold_config_init(kt_threshold_config* cfg);
KT_API kt_status kt_threshold_run(const kt_threshold_config* cfg, kt_threshold** out);
KT_API kt_status kt_threshold_get(const kt_threshold* t, kt_threshold_summary* out);
KT_API kt_status kt_threshold_to_json(const kt_threshold* t, char** out);
KT_API void kt_threshold_free(kt_threshold* t);

typedef struct kt_newton_config {
  kt_system system;
  double omega1_star;
  double epsilon;
  double eta;
  double Omega0;
  double alpha;
  double beta;
  int max_iter;
  double min_slope;
  int N;
} kt_newton_config;

typedef struct kt_newton kt_newton;

KT_API void kt_newton_config_init(kt_newton_config* cfg);
KT_API kt_status kt_newton_run(const kt_newton_config* cfg, kt_newton** out);
KT_API kt_status kt_newton_get(const kt_newton* n, double* Omega_star, int* iterations);
KT_API kt_status kt_newton_to_json(const kt_newton* n, char** out);
KT_API void kt_newton_free(kt_newton* n);

KT_API kt_status kt_diophantine_check(const double* omega, size_t n, double gamma, double tau,
                                      int kmax, int* satisfied);

/* ---- Poisson series ---- */

typedef struct kt_series kt_series;

KT_API kt_status kt_series_from_text(const char* text, kt_series** out);
KT_API kt_status kt_series_to_text(const kt_series* s, char** out);
KT_API kt_status kt_series_bracket(const kt_series* g, const kt_series* chi, kt_series** out);
KT_API kt_status kt_series_evaluate(const kt_series* s, const double* p, size_t n_p,
                                    const double* q, size_t n_q, double* value);
KT_API kt_status kt_series_l1_norm(const kt_series* s, double* value);
KT_API void kt_series_free(kt_series* s);

/* ---- Kolmogorov normalization of the forced pendulum ---- */

typedef struct kt_normalize_config {
  double epsilon;
  double eta;
  double omega1;
  double Omega_star;
  int K;
  int trunc_fourier;
  int r_max;
  double omega_plateau;
} kt_normalize_config;

typedef struct kt_step_record {
  int r;
  double norm_X;
  double norm_xi;
  double norm_chi2;
  double norm_Omega;
  double C_det;
  double residual_X;
  double residual_chi2;
  double closure_defect;
  double closure_defect_formal;
  int truncation_starved;
  int omega_plateau;
  double seconds;
} kt_step_record;

typedef struct kt_normalize_summary {
  int steps;
  double chi2_ratio;
  int omega_plateau_onset; /* -1 when no plateau was flagged */
  int stopped_early;       /* 1 when a step failed; see kt_normalization_error */
} kt_normalize_summary;

typedef struct kt_normalization kt_normalization;

KT_API void kt_normalize_config_init(kt_normalize_config* cfg);
KT_API kt_status kt_normalize_run(const kt_normalize_config* cfg, kt_normalization** out);
KT_API kt_status kt_normalization_get(const kt_normalization* n, kt_normalize_summary* out);
KT_API kt_status kt_normalization_step(const kt_normalization* n, size_t i,
                                       kt_step_record* out);
/* Message of the step that stopped the run, or NULL. */
KT_API const char* kt_normalization_error(const kt_normalization* n);
KT_API kt_status kt_normalization_steps_json(const kt_normalization* n, char** out);
KT_API kt_status kt_normalization_norms_csv(const kt_normalization* n, char** out);
/* Normalized action P1 at an original point, using the first `steps` steps
 * (all steps when steps < 0). */
KT_API kt_status kt_normalization_action(const kt_normalization* n, int steps, double p1,
                                         double q1, double q2, double* P1);
/* Max |P1| over n_points relaxed section returns, one value per entry of r_list. */
KT_API kt_status kt_normalization_verify(const kt_normalization* n, const int* r_list,
                                         size_t n_r, int n_points, int threads,
                                         double* max_abs_P1);
KT_API void kt_normalization_free(kt_normalization* n);

typedef struct kt_basin kt_basin;

KT_API kt_status kt_basin_run(const kt_normalization* n, int n_curve_samples, kt_basin** out);
KT_API kt_status kt_basin_get(const kt_basin* b, double* B, double* radius, int* unbounded);
KT_API size_t kt_basin_curve_size(const kt_basin* b);
/* Point i of the upper (P1 = +radius) and lower (P1 = -radius) curves. */
KT_API kt_status kt_basin_curve(const kt_basin* b, size_t i, double* q1_upper,
                                double* p1_upper, double* q1_lower, double* p1_lower);
/* Original section point for normalized (P1, Q1) with Q2 = 0. */
KT_API kt_status kt_basin_to_original(const kt_basin* b, double P1, double Q1, double* q1,
                                      double* p1);
KT_API void kt_basin_free(kt_basin* b);

#ifdef __cplusplus
}
#endif

#endif
