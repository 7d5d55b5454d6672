#include "kamtools/kamtools.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <new>
#include <string>

#include "kamtools/algebra.hpp"
#include "kamtools/dynamics.hpp"
#include "kamtools/error.hpp"
#include "kamtools/explorer.hpp"
#include "kamtools/kolmogorov.hpp"

namespace ex = kamtools::explorer;
namespace ko = kamtools::kolmogorov;
namespace al = kamtools::algebra;
namespace dy = kamtools::dynamics;

struct kt_scan {
  std::vector<ex::FrequencyMapSample> samples;
};

struct kt_threshold {
  ex::ThresholdResult result;
};

struct kt_newton {
  ex::NewtonResult result;
};

struct kt_series {
  al::Series series;
};

struct kt_normalization {
  kt_normalize_config cfg;
  ko::RunResult run;
  mutable std::mutex mu;
  mutable std::map<int, al::Series> action_cache;
};

struct kt_basin {
  ko::BasinEstimate estimate;
  ko::ForwardMap map;
  std::vector<double> omega;
};

namespace {

thread_local std::string g_last_error;

kt_status fail(kt_status code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

// Runs f, translating exceptions into status codes.
template <class F>
kt_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return KT_OK;
  } catch (const kamtools::Error& e) {
    return fail(static_cast<kt_status>(static_cast<int>(e.code())),
                std::string(kamtools::error_code_name(e.code())) + ": " + e.what());
  } catch (const std::bad_alloc&) {
    return fail(KT_ERR_OUT_OF_MEMORY, "out of memory");
  } catch (const std::exception& e) {
    return fail(KT_ERR_INTERNAL, e.what());
  }
}

kt_status null_arg(const char* name) {
  return fail(KT_ERR_NULL_POINTER, std::string("null pointer argument: ") + name);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

ex::SystemKind to_system(kt_system s) {
  switch (s) {
    case KT_SYSTEM_DISS_STD_MAP: return ex::SystemKind::DissStdMap;
    case KT_SYSTEM_FORCED_PENDULUM: return ex::SystemKind::ForcedPendulum;
  }
  throw kamtools::Error(kamtools::ErrorCode::InvalidArgument, "unknown system");
}

}  // namespace

extern "C" {

const char* kt_last_error(void) { return g_last_error.c_str(); }

const char* kt_status_name(kt_status status) {
  switch (status) {
    case KT_OK: return "Ok";
    case KT_ERR_NULL_POINTER: return "NullPointer";
    case KT_ERR_OUT_OF_MEMORY: return "OutOfMemory";
    case KT_ERR_INTERNAL: return "Internal";
    default: break;
  }
  if (status >= KT_ERR_INVALID_ARGUMENT && status <= KT_ERR_IO) {
    return kamtools::error_code_name(static_cast<kamtools::ErrorCode>(static_cast<int>(status)));
  }
  return "Unknown";
}

const char* kt_version(void) { return "1.0.0"; }

void kt_string_free(char* s) { std::free(s); }

kt_status kt_std_map_step(double epsilon, double eta, double Omega, double* y, double* x) {
  if (!y || !x) return null_arg("y/x");
  return guarded([&] {
    const auto next = dy::std_map_step({*y, *x}, {epsilon, eta, Omega});
    *y = next.y;
    *x = next.x;
  });
}

kt_status kt_poincare_map(double epsilon, double eta, double Omega, double* p1, double* q1) {
  if (!p1 || !q1) return null_arg("p1/q1");
  return guarded([&] {
    const auto next = dy::poincare_map({*p1, *q1}, {epsilon, eta, Omega});
    *p1 = next.p1;
    *q1 = next.q1;
  });
}

kt_status kt_relaxation_count(double eta, int* count) {
  if (!count) return null_arg("count");
  return guarded([&] { *count = dy::relaxation_count(eta); });
}

void kt_scan_config_init(kt_scan_config* cfg) {
  if (!cfg) return;
  *cfg = kt_scan_config{};
  cfg->system = KT_SYSTEM_DISS_STD_MAP;
  cfg->Omega_max = 1.0;
  cfg->n_points = 2;
  cfg->threads = 1;
}

kt_status kt_scan_run(const kt_scan_config* cfg, kt_scan** out) {
  if (!cfg || !out) return null_arg("cfg/out");
  *out = nullptr;
  return guarded([&] {
    ex::FrequencyScanConfig c;
    c.system = to_system(cfg->system);
    c.epsilon = cfg->epsilon;
    c.eta = cfg->eta;
    c.Omega_min = cfg->Omega_min;
    c.Omega_max = cfg->Omega_max;
    c.n_points = cfg->n_points;
    c.N = cfg->N;
    if (cfg->has_target) c.target_omega1 = cfg->target_omega1;
    c.start = {cfg->start_action, cfg->start_angle};
    c.threads = cfg->threads;
    if (const volatile int* flag = cfg->cancel) c.cancelled = [flag] { return *flag != 0; };
    auto h = std::make_unique<kt_scan>();
    h->samples = ex::scan_frequency_map(c);
    *out = h.release();
  });
}

size_t kt_scan_count(const kt_scan* scan) { return scan ? scan->samples.size() : 0; }

kt_status kt_scan_get(const kt_scan* scan, size_t i, kt_scan_sample* out) {
  if (!scan || !out) return null_arg("scan/out");
  if (i >= scan->samples.size()) return fail(KT_ERR_INDEX_OUT_OF_RANGE, "sample index");
  const auto& s = scan->samples[i];
  *out = {s.Omega, s.omega1, s.amplitude, s.relaxed ? 1 : 0, s.plateau_suspect ? 1 : 0,
          s.error ? 0 : 1};
  return KT_OK;
}

kt_status kt_scan_to_csv(const kt_scan* scan, char** out) {
  if (!scan || !out) return null_arg("scan/out");
  return guarded([&] { *out = dup_string(ex::scan_to_csv(scan->samples)); });
}

void kt_scan_free(kt_scan* scan) { delete scan; }

kt_status kt_measure_omega1(kt_system system, double epsilon, double eta, double Omega, int N,
                            double start_action, double start_angle, double* omega1) {
  if (!omega1) return null_arg("omega1");
  return guarded([&] {
    const auto s = ex::measure_omega1(to_system(system), epsilon, eta, Omega, N,
                                      {start_action, start_angle});
    if (s.error) throw kamtools::Error(kamtools::ErrorCode::NoPeak, *s.error);
    *omega1 = s.omega1;
  });
}

void kt_threshold_config_init(kt_threshold_config* cfg) {
  if (!cfg) return;
  const ex::ThresholdConfig d;
  *cfg = kt_threshold_config{};
  cfg->system = KT_SYSTEM_DISS_STD_MAP;
  cfg->target_uncertainty = d.target_uncertainty;
  cfg->confirm = d.confirm ? 1 : 0;
  cfg->window_halfwidth = d.window_halfwidth;
  cfg->max_widen = d.max_widen;
  cfg->max_probes = d.max_probes;
  cfg->threads = 1;
}

kt_status kt_threshold_run(const kt_threshold_config* cfg, kt_threshold** out) {
  if (!cfg || !out) return null_arg("cfg/out");
  *out = nullptr;
  return guarded([&] {
    ex::ThresholdConfig c;
    c.target_uncertainty = cfg->target_uncertainty;
    c.probe_N = cfg->probe_N;
    c.full_N = cfg->full_N;
    c.confirm = cfg->confirm != 0;
    c.window_halfwidth = cfg->window_halfwidth;
    if (cfg->has_Omega_bracket) c.omega_bracket = std::make_pair(cfg->Omega_lo, cfg->Omega_hi);
    c.max_widen = cfg->max_widen;
    c.max_probes = cfg->max_probes;
    c.start = {cfg->start_action, cfg->start_angle};
    c.threads = cfg->threads;
    auto h = std::make_unique<kt_threshold>();
    h->result = ex::find_threshold(cfg->omega1_star, cfg->eta, to_system(cfg->system),
                                   {cfg->eps_lo, cfg->eps_hi}, c);
    *out = h.release();
  });
}

kt_status kt_threshold_get(const kt_threshold* t, kt_threshold_summary* out) {
  if (!t || !out) return null_arg("t/out");
  const auto& r = t->result;
  *out = {r.eps_lo, r.eps_hi, r.eps_c, r.uncertainty, r.probes.size()};
  return KT_OK;
}

kt_status kt_threshold_to_json(const kt_threshold* t, char** out) {
  if (!t || !out) return null_arg("t/out");
  return guarded([&] { *out = dup_string(ex::threshold_to_json(t->result).dump(2)); });
}

void kt_threshold_free(kt_threshold* t) { delete t; }

void kt_newton_config_init(kt_newton_config* cfg) {
  if (!cfg) return;
  const ex::NewtonConfig d;
  *cfg = kt_newton_config{};
  cfg->system = KT_SYSTEM_FORCED_PENDULUM;
  cfg->alpha = d.alpha;
  cfg->beta = d.beta;
  cfg->max_iter = d.max_iter;
  cfg->min_slope = d.min_slope;
}

kt_status kt_newton_run(const kt_newton_config* cfg, kt_newton** out) {
  if (!cfg || !out) return null_arg("cfg/out");
  *out = nullptr;
  return guarded([&] {
    ex::NewtonConfig c;
    c.alpha = cfg->alpha;
    c.beta = cfg->beta;
    c.max_iter = cfg->max_iter;
    c.min_slope = cfg->min_slope;
    c.N = cfg->N;
    auto h = std::make_unique<kt_newton>();
    h->result = ex::invert_frequency_map(cfg->omega1_star, to_system(cfg->system),
                                         cfg->epsilon, cfg->eta, cfg->Omega0, c);
    *out = h.release();
  });
}

kt_status kt_newton_get(const kt_newton* n, double* Omega_star, int* iterations) {
  if (!n) return null_arg("n");
  if (Omega_star) *Omega_star = n->result.Omega_star;
  if (iterations) *iterations = n->result.iterations;
  return KT_OK;
}

kt_status kt_newton_to_json(const kt_newton* n, char** out) {
  if (!n || !out) return null_arg("n/out");
  return guarded([&] { *out = dup_string(ex::newton_to_json(n->result).dump(2)); });
}

void kt_newton_free(kt_newton* n) { delete n; }

kt_status kt_diophantine_check(const double* omega, size_t n, double gamma, double tau,
                               int kmax, int* satisfied) {
  if (!omega || !satisfied) return null_arg("omega/satisfied");
  return guarded([&] {
    *satisfied = ex::diophantine_check(std::vector<double>(omega, omega + n), {gamma, tau}, kmax)
                     ? 1
                     : 0;
  });
}

kt_status kt_series_from_text(const char* text, kt_series** out) {
  if (!text || !out) return null_arg("text/out");
  *out = nullptr;
  return guarded([&] {
    auto h = std::make_unique<kt_series>();
    h->series = al::from_text(text);
    *out = h.release();
  });
}

kt_status kt_series_to_text(const kt_series* s, char** out) {
  if (!s || !out) return null_arg("s/out");
  return guarded([&] { *out = dup_string(al::to_text(s->series)); });
}

kt_status kt_series_bracket(const kt_series* g, const kt_series* chi, kt_series** out) {
  if (!g || !chi || !out) return null_arg("g/chi/out");
  *out = nullptr;
  return guarded([&] {
    auto h = std::make_unique<kt_series>();
    h->series = al::poisson_bracket(g->series, chi->series);
    *out = h.release();
  });
}

kt_status kt_series_evaluate(const kt_series* s, const double* p, size_t n_p, const double* q,
                             size_t n_q, double* value) {
  if (!s || !value || (n_p && !p) || (n_q && !q)) return null_arg("s/p/q/value");
  return guarded([&] {
    const auto& ctx = s->series.context();
    if (n_p != static_cast<size_t>(ctx.n1) || n_q != static_cast<size_t>(ctx.n())) {
      throw kamtools::Error(kamtools::ErrorCode::InvalidArgument,
                            "point dimension does not match the series context");
    }
    *value = s->series.evaluate(std::vector<double>(p, p + n_p), std::vector<double>(q, q + n_q));
  });
}

kt_status kt_series_l1_norm(const kt_series* s, double* value) {
  if (!s || !value) return null_arg("s/value");
  *value = s->series.l1_norm();
  return KT_OK;
}

void kt_series_free(kt_series* s) { delete s; }

void kt_normalize_config_init(kt_normalize_config* cfg) {
  if (!cfg) return;
  const ko::RunOptions d;
  const al::SeriesContext ctx;
  *cfg = kt_normalize_config{};
  cfg->omega1 = (3.0 - std::sqrt(5.0)) / 2.0;
  cfg->K = ctx.K;
  cfg->trunc_fourier = ctx.trunc_fourier;
  cfg->r_max = d.r_max;
  cfg->omega_plateau = d.omega_plateau;
}

kt_status kt_normalize_run(const kt_normalize_config* cfg, kt_normalization** out) {
  if (!cfg || !out) return null_arg("cfg/out");
  *out = nullptr;
  return guarded([&] {
    al::SeriesContext ctx;
    ctx.K = cfg->K;
    ctx.trunc_fourier = cfg->trunc_fourier;
    const auto st = ko::init_normalization({cfg->epsilon, cfg->eta, cfg->Omega_star},
                                           cfg->omega1, cfg->Omega_star, ctx);
    ko::RunOptions opts;
    opts.r_max = cfg->r_max;
    opts.omega_plateau = cfg->omega_plateau;
    auto h = std::make_unique<kt_normalization>();
    h->cfg = *cfg;
    h->run = ko::run_normalization(st, opts);
    *out = h.release();
  });
}

kt_status kt_normalization_get(const kt_normalization* n, kt_normalize_summary* out) {
  if (!n || !out) return null_arg("n/out");
  const auto& r = n->run;
  *out = {static_cast<int>(r.state.history.size()), r.chi2_ratio,
          r.omega_plateau_onset ? *r.omega_plateau_onset : -1, r.error ? 1 : 0};
  return KT_OK;
}

kt_status kt_normalization_step(const kt_normalization* n, size_t i, kt_step_record* out) {
  if (!n || !out) return null_arg("n/out");
  const auto& h = n->run.state.history;
  if (i >= h.size()) return fail(KT_ERR_INDEX_OUT_OF_RANGE, "step index");
  const auto& s = h[i];
  *out = {s.r,
          s.norm_X,
          s.norm_xi,
          s.norm_chi2,
          s.norm_Omega,
          s.C_det,
          s.residual_X,
          s.residual_chi2,
          s.closure_defect,
          s.closure_defect_formal,
          s.truncation_starved ? 1 : 0,
          s.omega_plateau ? 1 : 0,
          s.seconds};
  return KT_OK;
}

const char* kt_normalization_error(const kt_normalization* n) {
  return n && n->run.error ? n->run.error->c_str() : nullptr;
}

kt_status kt_normalization_steps_json(const kt_normalization* n, char** out) {
  if (!n || !out) return null_arg("n/out");
  return guarded([&] {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& rec : n->run.state.history) steps.push_back(ko::step_to_json(rec));
    *out = dup_string(steps.dump(2));
  });
}

kt_status kt_normalization_norms_csv(const kt_normalization* n, char** out) {
  if (!n || !out) return null_arg("n/out");
  return guarded([&] { *out = dup_string(ko::norms_to_csv(n->run.state.history)); });
}

kt_status kt_normalization_action(const kt_normalization* n, int steps, double p1, double q1,
                                  double q2, double* P1) {
  if (!n || !P1) return null_arg("n/P1");
  return guarded([&] {
    const int total = static_cast<int>(n->run.state.history.size());
    const int use = steps < 0 ? total : std::min(steps, total);
    const al::Series* series = nullptr;
    {
      std::lock_guard<std::mutex> lock(n->mu);
      auto it = n->action_cache.find(use);
      if (it == n->action_cache.end()) {
        it = n->action_cache
                 .emplace(use, ko::normalized_action_series(n->run.transform.prefix(use)))
                 .first;
      }
      series = &it->second;
    }
    *P1 = series->evaluate({p1 - n->run.transform.omega.at(0)}, {q1, q2});
  });
}

kt_status kt_normalization_verify(const kt_normalization* n, const int* r_list, size_t n_r,
                                  int n_points, int threads, double* max_abs_P1) {
  if (!n || (n_r && !r_list) || (n_r && !max_abs_P1)) return null_arg("n/r_list/max_abs_P1");
  return guarded([&] {
    const dy::ForcedPendulumParams params{n->cfg.epsilon, n->cfg.eta, n->cfg.Omega_star};
    const auto checks = ko::verify_torus(n->run.transform, params,
                                         std::vector<int>(r_list, r_list + n_r), n_points,
                                         threads);
    for (size_t i = 0; i < checks.size(); ++i) max_abs_P1[i] = checks[i].max_abs_P1;
  });
}

void kt_normalization_free(kt_normalization* n) { delete n; }

kt_status kt_basin_run(const kt_normalization* n, int n_curve_samples, kt_basin** out) {
  if (!n || !out) return null_arg("n/out");
  *out = nullptr;
  return guarded([&] {
    if (n_curve_samples < 0) {
      throw kamtools::Error(kamtools::ErrorCode::InvalidArgument,
                            "n_curve_samples must be non-negative");
    }
    auto h = std::make_unique<kt_basin>();
    h->estimate = ko::basin_estimate(n->run.state, n->run.transform, n_curve_samples);
    h->map = ko::forward_map(n->run.transform);
    h->omega = n->run.transform.omega;
    *out = h.release();
  });
}

kt_status kt_basin_get(const kt_basin* b, double* B, double* radius, int* unbounded) {
  if (!b) return null_arg("b");
  if (B) *B = b->estimate.B;
  if (radius) *radius = b->estimate.radius;
  if (unbounded) *unbounded = b->estimate.unbounded ? 1 : 0;
  return KT_OK;
}

size_t kt_basin_curve_size(const kt_basin* b) { return b ? b->estimate.upper.size() : 0; }

kt_status kt_basin_curve(const kt_basin* b, size_t i, double* q1_upper, double* p1_upper,
                         double* q1_lower, double* p1_lower) {
  if (!b || !q1_upper || !p1_upper || !q1_lower || !p1_lower) return null_arg("b/outputs");
  if (i >= b->estimate.upper.size()) return fail(KT_ERR_INDEX_OUT_OF_RANGE, "curve index");
  *q1_upper = b->estimate.upper[i].q1;
  *p1_upper = b->estimate.upper[i].p1;
  *q1_lower = b->estimate.lower[i].q1;
  *p1_lower = b->estimate.lower[i].p1;
  return KT_OK;
}

kt_status kt_basin_to_original(const kt_basin* b, double P1, double Q1, double* q1, double* p1) {
  if (!b || !q1 || !p1) return null_arg("b/q1/p1");
  return guarded([&] {
    const auto pt = ko::normalized_to_original(b->map, b->omega, P1, Q1);
    *q1 = pt.q1;
    *p1 = pt.p1;
  });
}

void kt_basin_free(kt_basin* b) { delete b; }

}  // extern "C"
