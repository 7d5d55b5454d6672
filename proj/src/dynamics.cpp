#include "kamtools/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/numeric/odeint/stepper/runge_kutta_fehlberg78.hpp>

#include "kamtools/error.hpp"

namespace kamtools::dynamics {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

using State2 = std::array<double, 2>;  // (p1, unwrapped q1)
using Stepper = boost::numeric::odeint::runge_kutta_fehlberg78<State2>;

// q2 is slaved to time (dq2/dt = 1), so only (p1, q1) are integrated.
struct PendulumRhs {
  double epsilon;
  double eta;
  double Omega;
  double q2_start;
  void operator()(const State2& s, State2& ds, double t) const {
    const double q2 = q2_start + t;
    ds[0] = epsilon * (std::sin(s[1]) + std::sin(s[1] - q2)) -
            eta * (s[0] - Omega);
    ds[1] = s[0];
  }
};

// Adaptive RKF7(8) driver landing exactly on `duration`. `h` is the initial
// trial step on entry and the last proposed step on exit.
void advance(State2& x, double duration, const PendulumRhs& rhs,
             const IntegratorConfig& cfg, double& h) {
  if (duration <= 0.0) return;
  Stepper stepper;
  State2 out{};
  State2 err{};
  double t = 0.0;
  int attempts = 0;
  h = std::min(h, duration);
  while (t < duration) {
    if (++attempts > cfg.max_steps_per_section) {
      throw Error(ErrorCode::StepLimitExceeded,
                  "integrator exceeded " +
                      std::to_string(cfg.max_steps_per_section) + " steps");
    }
    const bool last = t + h >= duration;
    const double dt = last ? duration - t : h;
    stepper.do_step(rhs, x, t, out, dt, err);
    double ratio = 0.0;
    for (int i = 0; i < 2; ++i) {
      const double scale =
          cfg.abs_tol + cfg.rel_tol * std::max(std::abs(x[i]), std::abs(out[i]));
      ratio = std::max(ratio, std::abs(err[i]) / scale);
    }
    const double factor =
        ratio == 0.0 ? 5.0
                     : std::clamp(0.9 * std::pow(ratio, -1.0 / 8.0), 0.2, 5.0);
    if (ratio <= 1.0) {
      x = out;
      t = last ? duration : t + dt;
      if (!last) h = dt * factor;
    } else {
      h = dt * factor;
    }
  }
}

PendulumRhs make_rhs(const ForcedPendulumParams& p, double q2_start) {
  return {p.epsilon, p.eta, p.Omega, q2_start};
}

constexpr double kInitialStep = 0.5;

}  // namespace

double reduce_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

MapState std_map_step(const MapState& s, const DissStdMapParams& p) {
  const double y = s.y + p.epsilon * std::sin(s.x) - p.eta * (s.y - p.Omega);
  return {y, reduce_angle(s.x + y)};
}

std::vector<MapState> std_map_orbit(MapState state, int count,
                                    const DissStdMapParams& params) {
  std::vector<MapState> out;
  out.reserve(static_cast<size_t>(count) + 1);
  out.push_back(state);
  for (int n = 0; n < count; ++n) {
    state = std_map_step(state, params);
    out.push_back(state);
  }
  return out;
}

std::pair<double, double> std_map_cell_convert(double b, double c) {
  if (b == 1.0) {
    throw Error(ErrorCode::DegenerateConversion,
                "b = 1 leaves Omega undefined");
  }
  const double eta = 1.0 - b;
  return {eta, kTwoPi * c / eta};
}

FieldValue pendulum_vector_field(const FlowState& s,
                                 const ForcedPendulumParams& p) {
  return {p.epsilon * (std::sin(s.q1) + std::sin(s.q1 - s.q2)) -
              p.eta * (s.p1 - p.Omega),
          s.p1, 1.0};
}

FlowState integrate_flow(const FlowState& state, double duration,
                         const ForcedPendulumParams& params,
                         const IntegratorConfig& cfg) {
  if (duration < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "negative duration");
  }
  if (duration == 0.0) return state;
  State2 x{state.p1, state.q1};
  double h = kInitialStep;
  // Budget applies per 2*pi of integrated time.
  IntegratorConfig total = cfg;
  const double sections = std::max(1.0, std::ceil(duration / kTwoPi));
  total.max_steps_per_section = static_cast<int>(
      std::min(2.0e9, cfg.max_steps_per_section * sections));
  advance(x, duration, make_rhs(params, state.q2), total, h);
  return {x[0], reduce_angle(x[1]), reduce_angle(state.q2 + duration)};
}

SectionPoint poincare_map(const SectionPoint& point,
                          const ForcedPendulumParams& params,
                          const IntegratorConfig& cfg) {
  State2 x{point.p1, point.q1};
  double h = kInitialStep;
  advance(x, kTwoPi, make_rhs(params, 0.0), cfg, h);
  return {x[0], reduce_angle(x[1])};
}

std::vector<SectionPoint> poincare_orbit(const SectionPoint& start, int count,
                                         const ForcedPendulumParams& params,
                                         const IntegratorConfig& cfg) {
  std::vector<SectionPoint> out;
  out.reserve(static_cast<size_t>(count) + 1);
  out.push_back(start);
  State2 x{start.p1, start.q1};
  double h = kInitialStep;
  const PendulumRhs rhs = make_rhs(params, 0.0);
  for (int n = 0; n < count; ++n) {
    x[1] = reduce_angle(x[1]);
    advance(x, kTwoPi, rhs, cfg, h);
    out.push_back({x[0], reduce_angle(x[1])});
  }
  return out;
}

int relaxation_count(double eta) {
  if (!(eta > 0.0 && eta < 1.0)) {
    throw Error(ErrorCode::InvalidEta, "relaxation count needs 0 < eta < 1");
  }
  return static_cast<int>(
      std::ceil(-15.0 * std::log(10.0) / std::log1p(-eta)));
}

}  // namespace kamtools::dynamics
