#pragma once

#include <utility>
#include <vector>

namespace kamtools::dynamics {

struct DissStdMapParams {
  double epsilon = 0.0;
  double eta = 0.0;
  double Omega = 0.0;
};

struct ForcedPendulumParams {
  double epsilon = 0.0;
  double eta = 0.0;
  double Omega = 0.0;
};

// Angle x is kept reduced to [0, 2*pi).
struct MapState {
  double y = 0.0;
  double x = 0.0;
};

struct FlowState {
  double p1 = 0.0;
  double q1 = 0.0;
  double q2 = 0.0;
};

struct SectionPoint {
  double p1 = 0.0;
  double q1 = 0.0;
};

struct IntegratorConfig {
  double abs_tol = 1e-14;
  double rel_tol = 1e-14;
  int max_steps_per_section = 100000;
};

struct FieldValue {
  double dp1 = 0.0;
  double dq1 = 0.0;
  double dq2 = 0.0;
};

double reduce_angle(double a);

MapState std_map_step(const MapState& state, const DissStdMapParams& params);

// Iterates of the map starting at `state`; element 0 is `state` itself.
std::vector<MapState> std_map_orbit(MapState state, int count,
                                    const DissStdMapParams& params);

// Converts the (b, c) form of the dissipative map to (eta, Omega).
std::pair<double, double> std_map_cell_convert(double b, double c);

FieldValue pendulum_vector_field(const FlowState& state,
                                 const ForcedPendulumParams& params);

FlowState integrate_flow(const FlowState& state, double duration,
                         const ForcedPendulumParams& params,
                         const IntegratorConfig& cfg = {});

// One return to the section q2 = 0 mod 2*pi.
SectionPoint poincare_map(const SectionPoint& point,
                          const ForcedPendulumParams& params,
                          const IntegratorConfig& cfg = {});

// `count` successive section returns; element 0 is `start`. The step size is
// carried from one section to the next, so this is cheaper than calling
// poincare_map in a loop.
std::vector<SectionPoint> poincare_orbit(const SectionPoint& start, int count,
                                         const ForcedPendulumParams& params,
                                         const IntegratorConfig& cfg = {});

// Number of transient iterates after which (1-eta)^W drops below 1e-15.
int relaxation_count(double eta);

}  // namespace kamtools::dynamics
