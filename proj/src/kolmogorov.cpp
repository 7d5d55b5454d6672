#include "kamtools/kolmogorov.hpp"

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "kamtools/error.hpp"
#include "parallel.hpp"

namespace kamtools::kolmogorov {

namespace {

using algebra::Complex;

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kConjugacyOrderCap = 200;
constexpr double kConjugacyRelTol = 1e-18;

void family_add(Family& f, int l, int s, const Series& term) {
  if (term.empty()) return;
  auto it = f.find({l, s});
  if (it == f.end()) {
    f.emplace(std::make_pair(l, s), term);
  } else {
    it->second = algebra::add(it->second, term);
  }
}

Series family_get(const Family& f, int l, int s, const SeriesContext& ctx) {
  auto it = f.find({l, s});
  return it == f.end() ? Series(ctx) : it->second;
}

Series sum_classes(const Family& f, int l, int s_from, int s_to, const SeriesContext& ctx) {
  Series out(ctx);
  for (int s = s_from; s <= s_to; ++s) {
    auto it = f.find({l, s});
    if (it != f.end()) out = algebra::add(out, it->second);
  }
  return out;
}

double family_norm(const Family& f) {
  double s = 0.0;
  for (const auto& [idx, series] : f) s += series.l1_norm();
  return s;
}

double closure(const Family& f, int r, double scale) {
  double worst = 0.0;
  for (int s = 1; s <= r; ++s) {
    double v = 0.0;
    for (int l = 0; l <= 1; ++l) {
      auto it = f.find({l, s});
      if (it != f.end()) v += it->second.l1_norm();
    }
    worst = std::max(worst, v);
  }
  return scale > 0.0 ? worst / scale : worst;
}

double l1(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

// Degree-l terms with 0 < |k| <= rK.
Series target_part(const Series& f, int l, int r) {
  const auto& ctx = f.context();
  Series out(ctx);
  for (const auto& [key, c] : f.raw()) {
    const int h = algebra::key_harmonic(key, ctx.n1, ctx.n());
    if (algebra::key_degree(key, ctx.n1) == l && h > 0 && h <= r * ctx.K) out.add_raw(key, c);
  }
  return out;
}

// Adds (1/j!) L^j f to class s + j r for j >= 1 while the class stays within
// the cap. `degree_step` is the change of action degree per bracket.
void transport(Family& out, const Series& f, int l, int s, const Generator& gen, int r,
               int s_max, int degree_step) {
  Series term = f;
  for (int j = 1; s + j * r <= s_max; ++j) {
    term = algebra::scale(algebra::lie_derivative(term, gen), 1.0 / j);
    if (term.empty()) break;
    family_add(out, l + j * degree_step, s + j * r, term);
  }
}

std::vector<double> pad(const std::vector<double>& v, size_t n) {
  std::vector<double> out(v);
  out.resize(n, 0.0);
  return out;
}

}  // namespace

int class_cap(const SeriesContext& ctx) {
  return algebra::class_index(ctx.trunc_fourier, ctx.K);
}

ConjugacyTransform ConjugacyTransform::prefix(int steps) const {
  ConjugacyTransform out{ctx, omega, {}};
  const size_t count = std::min(generators.size(), static_cast<size_t>(2 * std::max(steps, 0)));
  out.generators.assign(generators.begin(), generators.begin() + static_cast<long>(count));
  return out;
}

NormalizationState init_normalization(const dynamics::ForcedPendulumParams& pendulum,
                                      double omega1, double Omega_star,
                                      const SeriesContext& ctx) {
  ctx.validate();
  if (ctx.n1 != 1 || ctx.n2 != 1) {
    throw Error(ErrorCode::InvalidArgument, "the pendulum needs n1 = 1 and n2 = 1");
  }
  if (ctx.trunc_action < 2) {
    throw Error(ErrorCode::InvalidArgument, "the pendulum needs trunc_action >= 2");
  }
  NormalizationState st;
  st.ctx = ctx;
  st.omega = {omega1, 1.0};
  st.Omega_r = {Omega_star - omega1, 0.0};
  st.eta = pendulum.eta;
  Series h(ctx);
  h.add({2}, {0, 0}, 0.5);
  if (pendulum.epsilon != 0.0) {
    h.add({0}, {1, 0}, 0.5 * pendulum.epsilon);
    h.add({0}, {1, -1}, 0.5 * pendulum.epsilon);
  }
  st.H = algebra::classify(h);
  return st;
}

Series solve_homological_X(const Series& f0_sum, const std::vector<double>& omega, double eta,
                           int r, double divisor_floor) {
  const auto& ctx = f0_sum.context();
  Series X(ctx);
  std::vector<int> j(static_cast<size_t>(ctx.n1)), k(static_cast<size_t>(ctx.n()));
  const Series target = target_part(f0_sum, 0, r);
  for (const auto& [key, c] : target.raw()) {
    algebra::unpack_key(key, ctx.n1, ctx.n(), j.data(), k.data());
    double kw = 0.0;
    for (int i = 0; i < ctx.n(); ++i) kw += k[static_cast<size_t>(i)] * omega[static_cast<size_t>(i)];
    const Complex divisor(eta, kw);
    if (std::abs(divisor) < divisor_floor) {
      throw Error(ErrorCode::SmallDivisor, "small divisor in the first homological equation");
    }
    X.add_raw(key, c / divisor);
  }
  X.prune();
  return X;
}

double homological_X_residual(const Series& X, const Series& f0_sum,
                              const std::vector<double>& omega, double eta, int r) {
  const Series f = target_part(f0_sum, 0, r);
  const double ref = f.l1_norm();
  if (ref == 0.0) return X.l1_norm();
  Series res = algebra::subtract(f, algebra::bracket_with_action_form(X, omega));
  res = algebra::subtract(res, algebra::scale(X, eta));
  return res.l1_norm() / ref;
}

XiSolution solve_xi(const Series& f1_r0, const Series& f2_r0, double nondeg_floor) {
  const auto& ctx = f2_r0.context();
  const int m = ctx.n1;
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(m);
  std::vector<int> j(static_cast<size_t>(m)), k(static_cast<size_t>(ctx.n()));
  for (const auto& [key, c] : f2_r0.raw()) {
    algebra::unpack_key(key, m, ctx.n(), j.data(), k.data());
    if (algebra::key_degree(key, m) != 2 || algebra::key_harmonic(key, m, ctx.n()) != 0) continue;
    int a = -1, b = -1;
    for (int i = 0; i < m; ++i) {
      for (int e = 0; e < j[static_cast<size_t>(i)]; ++e) (a < 0 ? a : b) = i;
    }
    if (a == b) {
      C(a, a) += 2.0 * c.real();
    } else {
      C(a, b) += c.real();
      C(b, a) += c.real();
    }
  }
  for (const auto& [key, c] : f1_r0.raw()) {
    algebra::unpack_key(key, m, ctx.n(), j.data(), k.data());
    if (algebra::key_degree(key, m) != 1 || algebra::key_harmonic(key, m, ctx.n()) != 0) continue;
    for (int i = 0; i < m; ++i) {
      if (j[static_cast<size_t>(i)] == 1) g(i) += c.real();
    }
  }
  XiSolution out;
  out.det = C.determinant();
  if (!(std::abs(out.det) >= nondeg_floor)) {
    throw Error(ErrorCode::DegenerateTwist, "the quadratic part is degenerate");
  }
  const Eigen::VectorXd xi = C.partialPivLu().solve(g);
  out.xi.assign(xi.data(), xi.data() + m);
  return out;
}

Series solve_homological_chi2(const Series& f1_sum, const std::vector<double>& omega, int r,
                              double divisor_floor) {
  const auto& ctx = f1_sum.context();
  Series chi(ctx);
  std::vector<int> j(static_cast<size_t>(ctx.n1)), k(static_cast<size_t>(ctx.n()));
  const Series target = target_part(f1_sum, 1, r);
  for (const auto& [key, c] : target.raw()) {
    algebra::unpack_key(key, ctx.n1, ctx.n(), j.data(), k.data());
    double kw = 0.0;
    for (int i = 0; i < ctx.n(); ++i) kw += k[static_cast<size_t>(i)] * omega[static_cast<size_t>(i)];
    if (std::abs(kw) < divisor_floor) {
      throw Error(ErrorCode::SmallDivisor, "small divisor in the second homological equation");
    }
    chi.add_raw(key, c / Complex(0.0, kw));
  }
  chi.prune();
  return chi;
}

double homological_chi2_residual(const Series& chi2, const Series& f1_sum,
                                 const std::vector<double>& omega, int r) {
  const Series f = target_part(f1_sum, 1, r);
  const double ref = f.l1_norm();
  if (ref == 0.0) return chi2.l1_norm();
  const Series res = algebra::subtract(f, algebra::bracket_with_action_form(chi2, omega));
  return res.l1_norm() / ref;
}

Intermediate apply_first_half(const NormalizationState& state) {
  const auto& ctx = state.ctx;
  const int r = state.r + 1;
  const int s_max = class_cap(ctx);
  Intermediate mid;
  mid.record.r = r;
  mid.record.truncation_starved = 2 * r > s_max;

  const Series f0_sum = sum_classes(state.H, 0, 1, r, ctx);
  const Series X = solve_homological_X(f0_sum, state.omega, state.eta, r);
  const XiSolution xs = solve_xi(family_get(state.H, 1, 0, ctx), family_get(state.H, 2, 0, ctx));
  mid.record.X = X;
  mid.record.xi = xs.xi;
  mid.record.C_det = xs.det;
  mid.record.norm_X = X.l1_norm();
  mid.record.norm_xi = l1(xs.xi);
  mid.record.residual_X = homological_X_residual(X, f0_sum, state.omega, state.eta, r);

  const Generator chi1{X, xs.xi};
  Family out = state.H;
  for (int s = 1; s <= r; ++s) out.erase({0, s});
  // Constant left by {omega.p, xi.q}.
  double shift = 0.0;
  for (int i = 0; i < ctx.n1; ++i) shift -= state.omega[static_cast<size_t>(i)] * xs.xi[static_cast<size_t>(i)];
  if (shift != 0.0) {
    Series c(ctx);
    c.add(std::vector<int>(static_cast<size_t>(ctx.n1), 0), std::vector<int>(static_cast<size_t>(ctx.n()), 0), shift);
    family_add(out, 0, 0, c);
  }
  for (const auto& [idx, f] : state.H) {
    const auto [l, s] = idx;
    if (l < 1) continue;
    Series term = f;
    for (int j = 1; j <= l && s + j * r <= s_max; ++j) {
      term = algebra::scale(algebra::lie_derivative(term, chi1), 1.0 / j);
      if (term.empty()) break;
      family_add(out, l - j, s + j * r, term);
    }
  }

  mid.state = state;
  mid.state.H = algebra::reorder(out);
  std::vector<double> xi_full = pad(xs.xi, static_cast<size_t>(ctx.n()));
  for (size_t i = 0; i < mid.state.Omega_r.size(); ++i) mid.state.Omega_r[i] += xi_full[i];
  return mid;
}

NormalizationState apply_second_half(const Intermediate& mid) {
  const NormalizationState& hat = mid.state;
  const auto& ctx = hat.ctx;
  const int r = mid.record.r;
  const int s_max = class_cap(ctx);
  StepRecord rec = mid.record;

  const Series f1_sum = sum_classes(hat.H, 1, 1, r, ctx);
  const Series chi2 = solve_homological_chi2(f1_sum, hat.omega, r);
  rec.chi2 = chi2;
  rec.norm_chi2 = chi2.l1_norm();
  rec.residual_chi2 = homological_chi2_residual(chi2, f1_sum, hat.omega, r);
  const Generator gen{chi2, {}};

  Family out = hat.H;
  for (int s = 1; s <= r; ++s) out.erase({1, s});

  // exp(L chi2)(-eta Omega.q) + eta Omega.q, starting from {-eta Omega.q, chi2}.
  Series t(ctx);
  for (int i = 0; i < ctx.n1; ++i) {
    t = algebra::add(t, algebra::scale(algebra::partial_p(chi2, i),
                                       -hat.eta * hat.Omega_r[static_cast<size_t>(i)]));
  }
  for (int j = 1; j * r <= s_max && !t.empty(); ++j) {
    if (j > 1) t = algebra::scale(algebra::lie_derivative(t, gen), 1.0 / j);
    family_add(out, 0, j * r, t);
  }
  // exp(L chi2)(omega.p) - omega.p - {omega.p, chi2}; the first-order term
  // cancels the removed f1 classes.
  Series b = algebra::scale(algebra::bracket_with_action_form(chi2, hat.omega), -1.0);
  for (int j = 2; j * r <= s_max && !b.empty(); ++j) {
    b = algebra::scale(algebra::lie_derivative(b, gen), 1.0 / j);
    family_add(out, 1, j * r, b);
  }
  for (const auto& [idx, f] : hat.H) {
    transport(out, f, idx.first, idx.second, gen, r, s_max, 0);
  }

  const double scale = family_norm(out) + l1(hat.omega);
  rec.closure_defect_formal = closure(out, r, scale);

  NormalizationState st = hat;
  st.r = r;
  st.H = algebra::reorder(out);
  rec.closure_defect = closure(st.H, r, family_norm(st.H) + l1(st.omega));
  rec.norm_Omega = l1(st.Omega_r);
  st.history.push_back(rec);
  return st;
}

RunResult run_normalization(const NormalizationState& state0, const RunOptions& opts) {
  if (opts.r_max < 1) throw Error(ErrorCode::InvalidArgument, "r_max must be at least 1");
  RunResult out;
  out.state = state0;
  out.transform.ctx = state0.ctx;
  out.transform.omega = state0.omega;
  for (int step = 0; step < opts.r_max; ++step) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const Intermediate mid = apply_first_half(out.state);
      NormalizationState next = apply_second_half(mid);
      StepRecord& rec = next.history.back();
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const double prev = out.state.history.empty() ? l1(out.state.Omega_r)
                                                    : out.state.history.back().norm_Omega;
      rec.omega_plateau =
          rec.norm_Omega <= opts.omega_plateau || (rec.norm_Omega >= prev && rec.norm_Omega < 1e-12);
      if (rec.omega_plateau && !out.omega_plateau_onset) out.omega_plateau_onset = rec.r;
      out.transform.generators.push_back({rec.X, rec.xi});
      out.transform.generators.push_back({rec.chi2, {}});
      out.state = std::move(next);
    } catch (const Error& e) {
      out.error = std::string(error_code_name(e.code())) + ": " + e.what();
      break;
    }
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int count = 0;
  for (const auto& rec : out.state.history) {
    if (!(rec.norm_chi2 > 0.0)) continue;
    const double x = rec.r, y = std::log(rec.norm_chi2);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  out.chi2_ratio = count >= 2 ? std::exp((count * sxy - sx * sy) / (count * sxx - sx * sx))
                              : std::numeric_limits<double>::quiet_NaN();
  return out;
}

Series normalized_action_series(const ConjugacyTransform& transform) {
  Series P(transform.ctx);
  std::vector<int> j(static_cast<size_t>(transform.ctx.n1), 0);
  j[0] = 1;
  P.add(j, std::vector<int>(static_cast<size_t>(transform.ctx.n()), 0), 1.0);
  for (auto it = transform.generators.rbegin(); it != transform.generators.rend(); ++it) {
    P = algebra::lie_series_apply(P, algebra::negate(*it), kConjugacyOrderCap, kConjugacyRelTol);
  }
  return P;
}

double conjugacy_normalized_action(const ConjugacyTransform& transform, double p1, double q1,
                                   double q2) {
  return normalized_action_series(transform).evaluate({p1 - transform.omega.at(0)}, {q1, q2});
}

ForwardMap forward_map(const ConjugacyTransform& transform) {
  const auto& ctx = transform.ctx;
  ForwardMap out;
  for (int i = 0; i < ctx.n1; ++i) {
    Series p(ctx);
    std::vector<int> j(static_cast<size_t>(ctx.n1), 0);
    j[static_cast<size_t>(i)] = 1;
    const std::vector<int> k0(static_cast<size_t>(ctx.n()), 0);
    p.add(j, k0, 1.0);
    Series coord = p;
    for (const auto& g : transform.generators) {
      coord = algebra::lie_series_apply(coord, g, kConjugacyOrderCap, kConjugacyRelTol);
    }
    out.p_shift.push_back(algebra::subtract(coord, p));
  }
  for (int i = 0; i < ctx.n(); ++i) {
    Series shift(ctx);
    for (const auto& g : transform.generators) {
      // exp(L_g)(q_i + S) = q_i + sum_{j>=1} L^{j-1}(dchi/dp_i)/j! + exp(L_g) S.
      Series t = algebra::partial_p(g.chi, i);
      Series acc = t;
      for (int j = 2; j <= kConjugacyOrderCap && !t.empty(); ++j) {
        t = algebra::scale(algebra::lie_derivative(t, g), 1.0 / j);
        acc = algebra::add(acc, t);
        if (t.l1_norm() <= kConjugacyRelTol * acc.l1_norm()) break;
      }
      shift = algebra::add(
          algebra::lie_series_apply(shift, g, kConjugacyOrderCap, kConjugacyRelTol), acc);
    }
    out.q_shift.push_back(shift);
  }
  return out;
}

CurvePoint normalized_to_original(const ForwardMap& map, const std::vector<double>& omega,
                                  double P1, double Q1) {
  const std::vector<double> P{P1};
  const std::vector<double> Q{Q1, 0.0};
  CurvePoint out;
  out.q1 = dynamics::reduce_angle(Q1 + map.q_shift.at(0).evaluate(P, Q));
  out.p1 = omega.at(0) + P1 + map.p_shift.at(0).evaluate(P, Q);
  return out;
}

std::vector<TorusCheck> verify_torus(const ConjugacyTransform& transform,
                                     const dynamics::ForcedPendulumParams& params,
                                     const std::vector<int>& r_list, int n_points,
                                     int threads) {
  if (n_points < 1) throw Error(ErrorCode::InvalidArgument, "n_points must be positive");
  const int W = dynamics::relaxation_count(params.eta);
  const auto orbit = dynamics::poincare_orbit({params.Omega, 0.0}, W + n_points - 1, params);
  std::vector<TorusCheck> out;
  for (int r : r_list) {
    const Series P = normalized_action_series(transform.prefix(r));
    std::vector<double> values(static_cast<size_t>(n_points));
    detail::parallel_for(n_points, threads, [&](int i) {
      const auto& pt = orbit[static_cast<size_t>(W + i)];
      values[static_cast<size_t>(i)] =
          std::abs(P.evaluate({pt.p1 - transform.omega.at(0)}, {pt.q1, 0.0}));
    });
    double worst = 0.0;
    for (double v : values) worst = std::max(worst, v);
    out.push_back({r, worst});
  }
  return out;
}

BasinEstimate basin_estimate(const NormalizationState& state,
                             const ConjugacyTransform& transform, int n_curve_samples) {
  const auto& ctx = state.ctx;
  BasinEstimate out;
  double B = 0.0;
  std::vector<int> j(static_cast<size_t>(ctx.n1)), k(static_cast<size_t>(ctx.n()));
  for (const auto& [idx, f] : state.H) {
    if (idx.first > 2 && !f.empty()) {
      throw Error(ErrorCode::NotQuadratic, "normal form has terms above degree two");
    }
    if (idx.first != 2) continue;
    for (const auto& [key, c] : f.raw()) {
      algebra::unpack_key(key, ctx.n1, ctx.n(), j.data(), k.data());
      if (algebra::key_harmonic(key, ctx.n1, ctx.n()) == 0) continue;
      B += 2.0 * std::abs(k[0]) * std::abs(c);
    }
  }
  out.B = B;
  if (B == 0.0) {
    out.unbounded = true;
    out.radius = std::numeric_limits<double>::infinity();
    return out;
  }
  out.radius = state.eta / B;
  const ForwardMap fm = forward_map(transform);
  for (int i = 0; i < n_curve_samples; ++i) {
    const double Q1 = kTwoPi * i / n_curve_samples;
    out.upper.push_back(normalized_to_original(fm, transform.omega, out.radius, Q1));
    out.lower.push_back(normalized_to_original(fm, transform.omega, -out.radius, Q1));
  }
  return out;
}

nlohmann::json step_to_json(const StepRecord& rec) {
  return {{"r", rec.r},
          {"norm_X", rec.norm_X},
          {"norm_xi", rec.norm_xi},
          {"norm_chi2", rec.norm_chi2},
          {"norm_Omega", rec.norm_Omega},
          {"xi", rec.xi},
          {"C_det", rec.C_det},
          {"residual_X", rec.residual_X},
          {"residual_chi2", rec.residual_chi2},
          {"closure_defect", rec.closure_defect},
          {"closure_defect_formal", rec.closure_defect_formal},
          {"truncation_starved", rec.truncation_starved},
          {"omega_plateau", rec.omega_plateau}};
}

std::string norms_to_csv(const std::vector<StepRecord>& history) {
  std::string out = "r,norm_X,norm_xi,norm_chi2,norm_Omega\n";
  char buf[160];
  for (const auto& rec : history) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", rec.r, rec.norm_X,
                  rec.norm_xi, rec.norm_chi2, rec.norm_Omega);
    out += buf;
  }
  return out;
}

}  // namespace kamtools::kolmogorov
