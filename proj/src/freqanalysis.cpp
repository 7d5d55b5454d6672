#include "kamtools/freqanalysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>

#include "kamtools/error.hpp"

namespace kamtools::freq {

namespace {

constexpr double kPi = std::numbers::pi;

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// Samples pre-multiplied by trapezoid weight, Hanning weight and 1/(2T), with
// times measured from the window centre.
struct Windowed {
  std::vector<cplx> zw;
  std::vector<double> tau;
  std::vector<double> w;  // quadrature weight times Hanning weight / (2T)
};

Windowed prepare(const OrbitSignal& s, const std::vector<cplx>& samples) {
  Windowed out;
  const size_t count = samples.size();
  out.zw.resize(count);
  out.tau.resize(count);
  out.w.resize(count);
  for (size_t n = 0; n < count; ++n) {
    const double u = -1.0 + 2.0 * static_cast<double>(n) / s.N;
    const double trap = (n == 0 || n + 1 == count) ? 0.5 : 1.0;
    const double weight = trap * (1.0 + std::cos(kPi * u)) * s.delta / (2.0 * s.T);
    out.tau[n] = u * s.T;
    out.w[n] = weight;
    out.zw[n] = samples[n] * weight;
  }
  return out;
}

// S(sigma) = sum zw_n exp(-i sigma tau_n); optionally dS/dsigma.
cplx transform(const Windowed& win, double sigma, cplx* derivative = nullptr) {
  constexpr size_t kBlock = 256;
  cplx total = 0.0;
  cplx total_d = 0.0;
  const size_t count = win.zw.size();
  for (size_t start = 0; start < count; start += kBlock) {
    const size_t stop = std::min(count, start + kBlock);
    cplx block = 0.0;
    cplx block_d = 0.0;
    for (size_t n = start; n < stop; ++n) {
      const double ph = -sigma * win.tau[n];
      const cplx term = win.zw[n] * cplx(std::cos(ph), std::sin(ph));
      block += term;
      if (derivative) block_d += term * win.tau[n];
    }
    total += block;
    total_d += block_d;
  }
  if (derivative) *derivative = cplx(0.0, -1.0) * total_d;
  return total;
}

double window_transform_real(const Windowed& win, double sigma) {
  double total = 0.0;
  for (size_t n = 0; n < win.w.size(); ++n) {
    total += win.w[n] * std::cos(sigma * win.tau[n]);
  }
  return total;
}

double fold_to_band(double sigma, double delta) {
  const double band = 2.0 * kPi / delta;
  double r = std::remainder(sigma, band);  // in [-band/2, band/2]
  if (r <= -band / 2.0) r += band;
  return r;
}

bool all_zero(const std::vector<cplx>& v) {
  return std::all_of(v.begin(), v.end(),
                     [](const cplx& c) { return c == cplx(0.0, 0.0); });
}

// Peak location for already-windowed samples.
double peak_frequency(const OrbitSignal& s, const Windowed& win,
                      const AnalysisConfig& cfg, std::optional<double> hint) {
  if (all_zero(win.zw)) {
    throw Error(ErrorCode::NoPeak, "signal is identically zero");
  }
  const int N = s.N;
  const double bin = 2.0 * kPi / (N * s.delta);
  const int bins = cfg.coarse_bins > 0 ? cfg.coarse_bins : N;

  // Coarse grid: magnitudes |S| at sigma_m = m * (band / bins).
  std::vector<double> mag(static_cast<size_t>(bins));
  const double grid_step = 2.0 * kPi / (bins * s.delta);
  if (bins == N) {
    std::vector<cplx> buf(static_cast<size_t>(N));
    for (int n = 0; n < N; ++n) buf[static_cast<size_t>(n)] = win.zw[static_cast<size_t>(n)];
    fftw_plan plan;
    {
      std::lock_guard<std::mutex> lock(fftw_planner_mutex());
      plan = fftw_plan_dft_1d(N, reinterpret_cast<fftw_complex*>(buf.data()),
                              reinterpret_cast<fftw_complex*>(buf.data()),
                              FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
      std::lock_guard<std::mutex> lock(fftw_planner_mutex());
      fftw_destroy_plan(plan);
    }
    for (int m = 0; m < N; ++m) mag[static_cast<size_t>(m)] = std::abs(buf[static_cast<size_t>(m)]);
  } else {
    for (int m = 0; m < bins; ++m) {
      mag[static_cast<size_t>(m)] = std::abs(transform(win, m * grid_step));
    }
  }

  auto bin_frequency = [&](int m) {
    return fold_to_band(m * grid_step, s.delta);
  };
  int best = -1;
  if (hint) {
    const double centre = fold_to_band(*hint, s.delta);
    const int mc = static_cast<int>(std::lround(centre / grid_step));
    for (int d = -cfg.hint_halfwidth_bins; d <= cfg.hint_halfwidth_bins; ++d) {
      const int m = ((mc + d) % bins + bins) % bins;
      if (best < 0 || mag[static_cast<size_t>(m)] > mag[static_cast<size_t>(best)]) best = m;
    }
  } else {
    best = static_cast<int>(std::max_element(mag.begin(), mag.end()) - mag.begin());
  }
  const double centre = bin_frequency(best);
  double a = centre - grid_step;
  double b = centre + grid_step;

  auto magnitude = [&](double sigma) { return std::abs(transform(win, sigma)); };

  // Golden-section on |S|.
  const double golden_stop = std::max(cfg.refine_tol, 1e-6 * bin);
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = magnitude(c);
  double fd = magnitude(d);
  while (b - a > golden_stop) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = magnitude(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = magnitude(d);
    }
  }

  // |S| is flat to first order at the peak, so its value alone cannot place
  // the maximum below ~sqrt(eps)/T. Finish on the zero of d|S|^2/dsigma.
  auto slope = [&](double sigma) {
    cplx ds;
    const cplx v = transform(win, sigma, &ds);
    return (std::conj(v) * ds).real();
  };
  double result = 0.5 * (a + b);
  const double ga = slope(a);
  const double gb = slope(b);
  if (ga > 0.0 && gb < 0.0 && cfg.refine_tol < b - a) {
    std::uintmax_t iters = 200;
    auto tol = [&](double lo, double hi) { return hi - lo < cfg.refine_tol; };
    auto r = boost::math::tools::toms748_solve(slope, a, b, ga, gb, tol, iters);
    result = 0.5 * (r.first + r.second);
  } else if (ga > 0.0 && gb < 0.0) {
    // Bracket already below refine_tol; pick the better end by slope ratio.
    result = a + (b - a) * ga / (ga - gb);
  }
  return fold_to_band(result, s.delta);
}

}  // namespace

double hanning_weight(double u) {
  if (!(std::abs(u) <= 1.0)) {
    throw Error(ErrorCode::DomainError, "Hanning weight needs |u| <= 1");
  }
  return 1.0 + std::cos(kPi * u);
}

cplx amplitude_at(const OrbitSignal& signal, double sigma) {
  const Windowed win = prepare(signal, signal.samples);
  return std::exp(cplx(0.0, -sigma * signal.t0)) * transform(win, sigma);
}

double principal_frequency(const OrbitSignal& signal, const AnalysisConfig& cfg,
                           std::optional<double> search_hint) {
  const Windowed win = prepare(signal, signal.samples);
  return peak_frequency(signal, win, cfg, search_hint);
}

std::optional<std::vector<int>> match_combination(double zeta,
                                                  const std::vector<double>& omega,
                                                  int max_order, double tol) {
  const size_t n = omega.size();
  if (n == 0) return std::nullopt;
  std::vector<int> k(n, 0);
  std::vector<int> best;
  double best_err = std::numeric_limits<double>::infinity();
  int best_order = 0;
  // Enumerate the leading n-1 components; the last one is the nearest integer.
  auto visit = [&](auto&& self, size_t idx, int used, double partial) -> void {
    if (idx + 1 == n) {
      const double rest = zeta - partial;
      if (omega[idx] == 0.0) return;
      const double kl = std::round(rest / omega[idx]);
      if (std::abs(kl) > max_order - used) return;
      k[idx] = static_cast<int>(kl);
      const double err = std::abs(rest - kl * omega[idx]);
      const int order = used + static_cast<int>(std::abs(kl));
      if (err < best_err || (err == best_err && order < best_order)) {
        best_err = err;
        best = k;
        best_order = order;
      }
      return;
    }
    const int room = max_order - used;
    for (int v = -room; v <= room; ++v) {
      k[idx] = v;
      self(self, idx + 1, used + std::abs(v), partial + v * omega[idx]);
    }
  };
  visit(visit, 0, 0, 0.0);
  if (best.empty() || !(best_err < tol)) return std::nullopt;
  return best;
}

FrequencySpectrum decompose_spectrum(
    const OrbitSignal& signal, const AnalysisConfig& cfg,
    const std::optional<std::vector<double>>& base_frequencies) {
  FrequencySpectrum out;
  const Windowed original = prepare(signal, signal.samples);
  std::vector<cplx> residual = signal.samples;
  auto windowed_norm = [&](const std::vector<cplx>& v) {
    double acc = 0.0;
    for (size_t n = 0; n < v.size(); ++n) acc += original.w[n] * std::norm(v[n]);
    return std::sqrt(acc);
  };
  double norm = windowed_norm(residual);
  out.residual_norm = norm;
  if (norm == 0.0) return out;

  const double bin = 2.0 * kPi / (signal.N * signal.delta);
  std::vector<double> zetas;
  std::vector<cplx> coeffs;   // relative to the window centre
  std::vector<cplx> projections;
  Eigen::MatrixXd gram(0, 0);

  for (int line = 0; line < cfg.max_lines; ++line) {
    const Windowed win = prepare(signal, residual);
    double zeta;
    try {
      zeta = peak_frequency(signal, win, cfg, std::nullopt);
    } catch (const Error&) {
      break;
    }
    bool duplicate = false;
    for (double z : zetas) {
      if (std::abs(z - zeta) < 1e-3 * bin) duplicate = true;
    }
    if (duplicate) break;

    const size_t L = zetas.size() + 1;
    Eigen::MatrixXd g(L, L);
    g.topLeftCorner(L - 1, L - 1) = gram;
    for (size_t a = 0; a + 1 < L; ++a) {
      const double v = window_transform_real(original, zeta - zetas[a]);
      g(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(L - 1)) = v;
      g(static_cast<Eigen::Index>(L - 1), static_cast<Eigen::Index>(a)) = v;
    }
    g(static_cast<Eigen::Index>(L - 1), static_cast<Eigen::Index>(L - 1)) =
        window_transform_real(original, 0.0);
    const cplx proj = transform(original, zeta);

    Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
    Eigen::VectorXd br(L), bi(L);
    for (size_t a = 0; a + 1 < L; ++a) {
      br(static_cast<Eigen::Index>(a)) = projections[a].real();
      bi(static_cast<Eigen::Index>(a)) = projections[a].imag();
    }
    br(static_cast<Eigen::Index>(L - 1)) = proj.real();
    bi(static_cast<Eigen::Index>(L - 1)) = proj.imag();
    const Eigen::VectorXd xr = ldlt.solve(br);
    const Eigen::VectorXd xi = ldlt.solve(bi);

    std::vector<cplx> updated(L);
    for (size_t a = 0; a < L; ++a) {
      updated[a] = cplx(xr(static_cast<Eigen::Index>(a)), xi(static_cast<Eigen::Index>(a)));
    }
    std::vector<cplx> trial = residual;
    std::vector<double> all_z = zetas;
    all_z.push_back(zeta);
    for (size_t a = 0; a < L; ++a) {
      const cplx delta_c = updated[a] - (a + 1 < L ? coeffs[a] : cplx(0.0));
      if (delta_c == cplx(0.0)) continue;
      for (size_t n = 0; n < trial.size(); ++n) {
        const double ph = all_z[a] * original.tau[n];
        trial[n] -= delta_c * cplx(std::cos(ph), std::sin(ph));
      }
    }
    const double trial_norm = windowed_norm(trial);
    if (!(trial_norm < norm * (1.0 - 1e-12))) break;

    residual.swap(trial);
    norm = trial_norm;
    zetas.push_back(zeta);
    coeffs = updated;
    projections.push_back(proj);
    gram = g;
    if (norm <= 1e-15 * out.residual_norm) {
      out.residual_norm = norm;
      break;
    }
    out.residual_norm = norm;
  }
  out.residual_norm = norm;

  for (size_t a = 0; a < zetas.size(); ++a) {
    SpectralLine l;
    l.frequency = zetas[a];
    l.amplitude = coeffs[a] * std::exp(cplx(0.0, -zetas[a] * signal.t0));
    if (base_frequencies) {
      l.combo = match_combination(zetas[a], *base_frequencies,
                                  cfg.max_combo_order, cfg.combo_tol);
    }
    out.lines.push_back(std::move(l));
  }
  std::stable_sort(out.lines.begin(), out.lines.end(),
                   [](const SpectralLine& x, const SpectralLine& y) {
                     return std::abs(x.amplitude) > std::abs(y.amplitude);
                   });
  return out;
}

OrbitSignal orbit_signal_from_map(const std::vector<dynamics::MapState>& iterates,
                                  double delta, int W, int N) {
  if (W < 0 || N < 2 || !(delta > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "bad signal window");
  }
  if (iterates.size() < static_cast<size_t>(W) + static_cast<size_t>(N) + 1) {
    throw Error(ErrorCode::InsufficientData,
                "orbit shorter than W + N + 1 iterates");
  }
  OrbitSignal s;
  s.delta = delta;
  s.N = N;
  s.T = delta * N / 2.0;
  s.t0 = delta * (W + N / 2.0);
  s.samples.resize(static_cast<size_t>(N) + 1);
  for (int n = 0; n <= N; ++n) {
    const auto& st = iterates[static_cast<size_t>(W + n)];
    s.samples[static_cast<size_t>(n)] = st.y * cplx(std::cos(st.x), std::sin(st.x));
  }
  return s;
}

nlohmann::json spectrum_to_json(const FrequencySpectrum& spectrum) {
  nlohmann::json lines = nlohmann::json::array();
  for (const auto& l : spectrum.lines) {
    nlohmann::json j;
    j["re"] = l.amplitude.real();
    j["im"] = l.amplitude.imag();
    j["zeta"] = l.frequency;
    j["k"] = l.combo ? nlohmann::json(*l.combo) : nlohmann::json(nullptr);
    lines.push_back(j);
  }
  return {{"lines", lines}, {"residual_norm", spectrum.residual_norm}};
}

}  // namespace kamtools::freq
