#include "kamtools/explorer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "kamtools/dynamics.hpp"
#include "kamtools/error.hpp"
#include "kamtools/freqanalysis.hpp"
#include "parallel.hpp"

namespace kamtools::explorer {

namespace {

constexpr double kPi = std::numbers::pi;

double fold(SystemKind system, double sigma, double delta) {
  const double band = 2.0 * kPi / delta;
  double r = std::remainder(sigma, band);
  if (r <= -band / 2.0) r += band;
  return system == SystemKind::DissStdMap ? std::abs(r) : r;
}

std::pair<double, double> default_omega_bracket(SystemKind system, double w) {
  const double s = system == SystemKind::DissStdMap ? 0.1 : 0.02;
  return {w - s, w + 2.0 * s};
}

}  // namespace

const char* system_name(SystemKind system) {
  return system == SystemKind::DissStdMap ? "std_map" : "pendulum";
}

int default_full_N(SystemKind system) {
  return system == SystemKind::DissStdMap ? (1 << 19) : (1 << 16);
}

int default_probe_N(SystemKind system) {
  return system == SystemKind::DissStdMap ? (1 << 16) : (1 << 14);
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::TorusPersists: return "TorusPersists";
    case Verdict::TorusBroken: return "TorusBroken";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

FrequencyMapSample measure_omega1(SystemKind system, double epsilon, double eta,
                                  double Omega, int N, const StartOffset& start) {
  if (N <= 0) N = default_full_N(system);
  const int W = eta == 0.0 ? 0 : dynamics::relaxation_count(eta);
  std::vector<dynamics::MapState> orbit;
  double delta = 1.0;
  if (system == SystemKind::DissStdMap) {
    orbit = dynamics::std_map_orbit({Omega + start.action, start.angle}, W + N,
                                    {epsilon, eta, Omega});
  } else {
    delta = 2.0 * kPi;
    const auto section = dynamics::poincare_orbit({Omega + start.action, start.angle},
                                                  W + N,
                                                  {epsilon, eta, Omega});
    orbit.reserve(section.size());
    for (const auto& s : section) orbit.push_back({s.p1, s.q1});
  }
  const freq::OrbitSignal signal =
      freq::orbit_signal_from_map(orbit, delta, W, N);
  const double sigma = freq::principal_frequency(signal, {});
  FrequencyMapSample out;
  out.Omega = Omega;
  out.omega1 = fold(system, sigma, delta);
  out.amplitude = std::abs(freq::amplitude_at(signal, sigma));
  out.relaxed = W > 0;
  return out;
}

void mark_plateaus(std::vector<FrequencyMapSample>& samples, int min_run,
                   double tol) {
  const size_t n = samples.size();
  size_t start = 0;
  while (start < n) {
    size_t stop = start + 1;
    while (stop < n && !samples[stop].error && !samples[stop - 1].error &&
           std::abs(samples[stop].omega1 - samples[stop - 1].omega1) <= tol) {
      ++stop;
    }
    if (stop - start >= static_cast<size_t>(min_run)) {
      for (size_t i = start; i < stop; ++i) samples[i].plateau_suspect = true;
    }
    start = stop;
  }
}

std::vector<FrequencyMapSample> scan_frequency_map(const FrequencyScanConfig& cfg) {
  if (cfg.n_points < 1) {
    throw Error(ErrorCode::InvalidArgument, "scan needs at least one point");
  }
  if (cfg.n_points > 1 && !(cfg.Omega_min < cfg.Omega_max)) {
    throw Error(ErrorCode::InvalidArgument, "scan needs Omega_min < Omega_max");
  }
  std::vector<FrequencyMapSample> out(static_cast<size_t>(cfg.n_points));
  std::vector<char> done(static_cast<size_t>(cfg.n_points), 0);
  detail::parallel_for(cfg.n_points, cfg.threads, [&](int i) {
    if (cfg.cancelled && cfg.cancelled()) return;
    const double Omega =
        cfg.n_points == 1
            ? cfg.Omega_min
            : cfg.Omega_min + (cfg.Omega_max - cfg.Omega_min) * i / (cfg.n_points - 1);
    FrequencyMapSample s;
    try {
      s = measure_omega1(cfg.system, cfg.epsilon, cfg.eta, Omega, cfg.N, cfg.start);
    } catch (const Error& e) {
      s.Omega = Omega;
      s.omega1 = std::numeric_limits<double>::quiet_NaN();
      s.error = std::string(error_code_name(e.code())) + ": " + e.what();
    }
    out[static_cast<size_t>(i)] = s;
    done[static_cast<size_t>(i)] = 1;
  });
  out.resize(static_cast<size_t>(std::find(done.begin(), done.end(), 0) - done.begin()));
  mark_plateaus(out);
  return out;
}

Verdict regularity_verdict(const std::vector<FrequencyMapSample>& samples,
                           double omega1_star, const VerdictConfig& cfg) {
  const int n = static_cast<int>(samples.size());
  const int width = 2 * cfg.m + 1;
  if (n < width) {
    throw Error(ErrorCode::InsufficientSamples,
                "regularity verdict needs 2m+1 samples");
  }
  for (const auto& s : samples) {
    if (s.error || !std::isfinite(s.omega1)) return Verdict::Inconclusive;
  }
  auto crosses = [&](int i) {
    const double a = samples[static_cast<size_t>(i)].omega1 - omega1_star;
    const double b = samples[static_cast<size_t>(i + 1)].omega1 - omega1_star;
    return (a < 0.0 && b >= 0.0) || (a >= 0.0 && b < 0.0);
  };
  // Crossing closest to the middle of the sample list.
  int best = -1;
  for (int i = 0; i + 1 < n; ++i) {
    if (!crosses(i)) continue;
    if (best < 0 || std::abs(2 * i + 1 - n) < std::abs(2 * best + 1 - n)) best = i;
  }
  if (best < 0) return Verdict::Inconclusive;
  const double d0 = std::abs(samples[static_cast<size_t>(best)].omega1 - omega1_star);
  const double d1 = std::abs(samples[static_cast<size_t>(best + 1)].omega1 - omega1_star);
  const int centre = d0 <= d1 ? best : best + 1;
  const int lo = std::clamp(centre - cfg.m, 0, n - width);
  const int hi = lo + width;  // exclusive

  double mx = 0.0, my = 0.0;
  double ymin = std::numeric_limits<double>::infinity();
  double ymax = -ymin;
  for (int i = lo; i < hi; ++i) {
    mx += samples[static_cast<size_t>(i)].Omega;
    my += samples[static_cast<size_t>(i)].omega1;
    ymin = std::min(ymin, samples[static_cast<size_t>(i)].omega1);
    ymax = std::max(ymax, samples[static_cast<size_t>(i)].omega1);
  }
  mx /= width;
  my /= width;
  const double span = ymax - ymin;
  if (!(span > 0.0)) return Verdict::Inconclusive;
  double sxx = 0.0, sxy = 0.0;
  for (int i = lo; i < hi; ++i) {
    const double dx = samples[static_cast<size_t>(i)].Omega - mx;
    sxx += dx * dx;
    sxy += dx * (samples[static_cast<size_t>(i)].omega1 - my);
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  double max_resid = 0.0;
  for (int i = lo; i < hi; ++i) {
    const auto& s = samples[static_cast<size_t>(i)];
    max_resid = std::max(max_resid, std::abs(s.omega1 - my - slope * (s.Omega - mx)));
  }

  // Plateau membership inside the window.
  std::vector<bool> on_plateau(static_cast<size_t>(n), false);
  for (int start = lo; start < hi;) {
    int stop = start + 1;
    while (stop < hi && std::abs(samples[static_cast<size_t>(stop)].omega1 -
                                 samples[static_cast<size_t>(stop - 1)].omega1) <=
                            cfg.plateau_tol) {
      ++stop;
    }
    if (stop - start >= cfg.plateau_len) {
      for (int i = start; i < stop; ++i) on_plateau[static_cast<size_t>(i)] = true;
    }
    start = stop;
  }

  bool plateau_at_crossing = false;
  bool jump_at_crossing = false;
  for (int i = lo; i + 1 < hi; ++i) {
    if (!crosses(i)) continue;
    if (on_plateau[static_cast<size_t>(i)] || on_plateau[static_cast<size_t>(i + 1)]) {
      plateau_at_crossing = true;
    }
    const double step = std::abs(samples[static_cast<size_t>(i + 1)].omega1 -
                                 samples[static_cast<size_t>(i)].omega1);
    if (step >= cfg.gap_tol * span) jump_at_crossing = true;
  }
  if (plateau_at_crossing || jump_at_crossing) return Verdict::TorusBroken;
  if (max_resid < cfg.jump_tol * span && slope > 0.0) return Verdict::TorusPersists;
  return Verdict::Inconclusive;
}

ProbeOutcome probe_regularity(SystemKind system, double epsilon, double eta,
                              double omega1_star, std::pair<double, double> bracket,
                              double halfwidth, int N, const VerdictConfig& vcfg,
                              int threads, const StartOffset& start) {
  ProbeOutcome out;
  out.Omega_center = std::numeric_limits<double>::quiet_NaN();
  auto omega_at = [&](double Omega) {
    return measure_omega1(system, epsilon, eta, Omega, N, start).omega1;
  };
  double lo = bracket.first;
  double hi = bracket.second;
  double wlo, whi;
  try {
    wlo = omega_at(lo);
    whi = omega_at(hi);
    for (int k = 0; k < 8 && !(wlo < omega1_star && whi >= omega1_star); ++k) {
      const double width = hi - lo;
      if (!(wlo < omega1_star)) {
        lo -= width;
        wlo = omega_at(lo);
      }
      if (!(whi >= omega1_star)) {
        hi += width;
        whi = omega_at(hi);
      }
    }
    if (!(wlo < omega1_star && whi >= omega1_star)) return out;
    for (int it = 0; it < 200 && hi - lo > halfwidth / 8.0; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (omega_at(mid) < omega1_star) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
  } catch (const Error&) {
    return out;
  }
  out.Omega_center = 0.5 * (lo + hi);
  const int count = 2 * vcfg.m + 1;
  out.window.resize(static_cast<size_t>(count));
  detail::parallel_for(count, threads, [&](int i) {
    const double Omega = out.Omega_center - halfwidth + 2.0 * halfwidth * i / (count - 1);
    FrequencyMapSample s;
    try {
      s = measure_omega1(system, epsilon, eta, Omega, N, start);
    } catch (const Error& e) {
      s.Omega = Omega;
      s.omega1 = std::numeric_limits<double>::quiet_NaN();
      s.error = e.what();
    }
    out.window[static_cast<size_t>(i)] = s;
  });
  mark_plateaus(out.window, vcfg.plateau_len, vcfg.plateau_tol);
  out.verdict = regularity_verdict(out.window, omega1_star, vcfg);
  return out;
}

ThresholdResult find_threshold(double omega1_star, double eta, SystemKind system,
                               std::pair<double, double> eps_bracket,
                               const ThresholdConfig& cfg) {
  if (!(eps_bracket.first < eps_bracket.second) || eps_bracket.first < 0.0) {
    throw Error(ErrorCode::BracketInvalid, "epsilon bracket must satisfy 0 <= lo < hi");
  }
  if (!(cfg.target_uncertainty > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "target_uncertainty must be positive");
  }
  ThresholdResult result;
  result.omega1_star = omega1_star;
  result.eta = eta;
  const int probe_N = cfg.probe_N > 0 ? cfg.probe_N : default_probe_N(system);
  const int full_N = cfg.full_N > 0 ? cfg.full_N : default_full_N(system);
  std::pair<double, double> omega_bracket =
      cfg.omega_bracket ? *cfg.omega_bracket : default_omega_bracket(system, omega1_star);
  const double recentre_margin =
      0.25 * (omega_bracket.second - omega_bracket.first);

  auto evaluate = [&](double eps, int N, const char* stage) {
    if (static_cast<int>(result.probes.size()) >= cfg.max_probes) {
      throw Error(ErrorCode::BudgetExceeded, "threshold search exceeded its probe budget");
    }
    ProbeRecord rec;
    rec.epsilon = eps;
    rec.N = N;
    rec.halfwidth = cfg.window_halfwidth;
    rec.stage = stage;
    ProbeOutcome o = probe_regularity(system, eps, eta, omega1_star, omega_bracket,
                                      cfg.window_halfwidth, N, cfg.verdict, cfg.threads,
                                      cfg.start);
    if (o.verdict == Verdict::Inconclusive) {
      // One retry on a narrower window around a freshly located crossing.
      rec.retried = true;
      rec.halfwidth = 0.5 * cfg.window_halfwidth;
      o = probe_regularity(system, eps, eta, omega1_star, omega_bracket,
                           rec.halfwidth, N, cfg.verdict, cfg.threads, cfg.start);
    }
    rec.verdict = o.verdict;
    rec.Omega_center = o.Omega_center;
    if (std::isfinite(o.Omega_center) && o.verdict == Verdict::TorusPersists) {
      omega_bracket = {o.Omega_center - recentre_margin, o.Omega_center + recentre_margin};
    }
    result.probes.push_back(rec);
    // Inconclusive after the retry counts as broken.
    return o.verdict == Verdict::TorusPersists;
  };

  double lo = eps_bracket.first;
  double hi = eps_bracket.second;

  auto establish = [&](int N, const char* stage) {
    int widen = 0;
    while (!evaluate(lo, N, stage)) {
      if (++widen > cfg.max_widen) {
        throw Error(ErrorCode::BracketInvalid, "no persisting torus at the lower end");
      }
      const double width = hi - lo;
      hi = lo;
      lo = std::max(0.0, lo - 2.0 * width);
    }
    widen = 0;
    while (evaluate(hi, N, stage)) {
      if (++widen > cfg.max_widen) {
        throw Error(ErrorCode::BracketInvalid, "torus still persists at the upper end");
      }
      const double width = hi - lo;
      lo = hi;
      hi = hi + 2.0 * width;
    }
  };
  auto bisect = [&](int N, const char* stage) {
    while (hi - lo > 2.0 * cfg.target_uncertainty) {
      const double mid = 0.5 * (lo + hi);
      if (evaluate(mid, N, stage)) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
  };

  establish(probe_N, "bracket");
  bisect(probe_N, "bisect");
  if (cfg.confirm && full_N != probe_N) {
    establish(full_N, "confirm");
    bisect(full_N, "confirm-bisect");
  }
  result.eps_lo = lo;
  result.eps_hi = hi;
  result.eps_c = 0.5 * (lo + hi);
  result.uncertainty = 0.5 * (hi - lo);
  return result;
}

NewtonResult invert_frequency_map(double omega1_star, SystemKind system,
                                  double epsilon, double eta, double Omega0,
                                  const NewtonConfig& cfg) {
  NewtonResult out;
  double Omega = Omega0;
  for (int j = 1; j <= cfg.max_iter; ++j) {
    const double w = measure_omega1(system, epsilon, eta, Omega, cfg.N).omega1;
    const double w_shift =
        measure_omega1(system, epsilon, eta, (1.0 + cfg.alpha) * Omega, cfg.N).omega1;
    const double diff = w_shift - w;
    if (!(std::abs(diff) >= cfg.min_slope * cfg.alpha * std::abs(Omega))) {
      throw Error(ErrorCode::FlatDerivative,
                  "finite difference of the frequency map is too small");
    }
    const double next = Omega - (w - omega1_star) * cfg.alpha * Omega / diff;
    const double denom = std::abs(next) + std::abs(Omega);
    const double rel = denom == 0.0 ? 0.0 : std::abs(next - Omega) / denom;
    out.history.push_back({next, w, rel});
    Omega = next;
    out.iterations = j;
    out.Omega_star = Omega;
    if (rel < cfg.beta) return out;
  }
  throw Error(ErrorCode::MaxIterExceeded, "Newton inversion did not converge");
}

bool diophantine_check(const std::vector<double>& omega,
                       const DiophantineParams& params, int kmax) {
  if (omega.size() != 2 || kmax < 1) {
    throw Error(ErrorCode::InvalidArgument,
                "diophantine check takes a 2-vector and kmax >= 1");
  }
  for (int n1 = -kmax; n1 <= kmax; ++n1) {
    if (n1 == 0) continue;
    const double bound = params.gamma / std::pow(std::abs(n1), params.tau);
    for (int n2 = -kmax; n2 <= kmax; ++n2) {
      if (std::abs(n1 * omega[0] + n2 * omega[1]) < bound) return false;
    }
  }
  return true;
}

std::string scan_to_csv(const std::vector<FrequencyMapSample>& samples) {
  std::string out = "Omega,omega1,amplitude,relaxed,plateau_suspect\n";
  char buf[160];
  for (const auto& s : samples) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%d,%d\n", s.Omega, s.omega1,
                  s.amplitude, s.relaxed ? 1 : 0, s.plateau_suspect ? 1 : 0);
    out += buf;
  }
  return out;
}

nlohmann::json threshold_to_json(const ThresholdResult& r) {
  nlohmann::json probes = nlohmann::json::array();
  for (const auto& p : r.probes) {
    probes.push_back({{"epsilon", p.epsilon},
                      {"N", p.N},
                      {"Omega_center", std::isfinite(p.Omega_center)
                                           ? nlohmann::json(p.Omega_center)
                                           : nlohmann::json(nullptr)},
                      {"halfwidth", p.halfwidth},
                      {"verdict", verdict_name(p.verdict)},
                      {"retried", p.retried},
                      {"stage", p.stage}});
  }
  return {{"omega1_star", r.omega1_star}, {"eta", r.eta},
          {"eps_lo", r.eps_lo},           {"eps_hi", r.eps_hi},
          {"eps_c", r.eps_c},             {"uncertainty", r.uncertainty},
          {"probes", probes}};
}

nlohmann::json newton_to_json(const NewtonResult& r) {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& h : r.history) {
    hist.push_back({{"Omega", h.Omega},
                    {"omega1", h.omega1},
                    {"relative_correction", h.relative_correction}});
  }
  return {{"Omega_star", r.Omega_star}, {"iterations", r.iterations}, {"history", hist}};
}

}  // namespace kamtools::explorer
