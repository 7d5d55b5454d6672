#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "kamtools/algebra.hpp"
#include "kamtools/dynamics.hpp"

namespace kamtools::kolmogorov {

using algebra::Family;
using algebra::Generator;
using algebra::Series;
using algebra::SeriesContext;

inline constexpr double kDivisorFloor = 1e-12;
inline constexpr double kNondegFloor = 1e-8;

struct StepRecord {
  int r = 0;
  Series X;
  std::vector<double> xi;
  Series chi2;
  double norm_X = 0.0;
  double norm_xi = 0.0;
  double norm_chi2 = 0.0;
  double norm_Omega = 0.0;
  double C_det = 0.0;
  // Relative residuals of the two homological equations.
  double residual_X = 0.0;
  double residual_chi2 = 0.0;
  // max over 1 <= s <= r of |f0^(r,s)| + |f1^(r,s)|, relative to |H|, after
  // the step (literal), and before the final reordering (formal classes).
  double closure_defect = 0.0;
  double closure_defect_formal = 0.0;
  // The Lie-series transport of step r lost its second-order terms to the
  // class cap, so the norms of this step are unreliable.
  bool truncation_starved = false;
  bool omega_plateau = false;
  double seconds = 0.0;
};

struct NormalizationState {
  int r = 0;
  SeriesContext ctx;
  Family H;  // perturbation part, omega.p kept separately
  std::vector<double> omega;
  std::vector<double> Omega_r;
  double eta = 0.0;
  std::vector<StepRecord> history;
};

struct Intermediate {
  NormalizationState state;  // H holds H-hat, Omega_r holds Omega-hat
  StepRecord record;
};

// Generators in application order: chi1^(1), chi2^(1), ..., chi1^(r), chi2^(r).
struct ConjugacyTransform {
  SeriesContext ctx;
  std::vector<double> omega;
  std::vector<Generator> generators;

  ConjugacyTransform prefix(int steps) const;
};

int class_cap(const SeriesContext& ctx);

NormalizationState init_normalization(const dynamics::ForcedPendulumParams& pendulum,
                                      double omega1, double Omega_star,
                                      const SeriesContext& ctx);

Series solve_homological_X(const Series& f0_sum, const std::vector<double>& omega, double eta,
                           int r, double divisor_floor = kDivisorFloor);
// |-omega.dX/dq - eta X + f0| / |f0| over the angle-dependent part.
double homological_X_residual(const Series& X, const Series& f0_sum,
                              const std::vector<double>& omega, double eta, int r);

struct XiSolution {
  std::vector<double> xi;
  double det = 0.0;
};
// C xi = g where f2 = p.C p / 2 and f1 = g.p.
XiSolution solve_xi(const Series& f1_r0, const Series& f2_r0,
                    double nondeg_floor = kNondegFloor);

Series solve_homological_chi2(const Series& f1_sum, const std::vector<double>& omega, int r,
                              double divisor_floor = kDivisorFloor);
// |-omega.dchi2/dq + f1| / |f1|.
double homological_chi2_residual(const Series& chi2, const Series& f1_sum,
                                 const std::vector<double>& omega, int r);

Intermediate apply_first_half(const NormalizationState& state);
NormalizationState apply_second_half(const Intermediate& mid);

struct RunOptions {
  int r_max = 20;
  double omega_plateau = 1e-15;
};

struct RunResult {
  NormalizationState state;
  ConjugacyTransform transform;
  // Geometric ratio fitted to log |chi2^(r)| over all steps with chi2 != 0.
  double chi2_ratio = 0.0;
  std::optional<int> omega_plateau_onset;
  std::optional<std::string> error;
};

RunResult run_normalization(const NormalizationState& state0, const RunOptions& opts);

// Normalized action P1 as a series in the translated original coordinates
// (p1 - omega1, q): exp(L_{-chi_first}) ... exp(L_{-chi_last}) p1.
Series normalized_action_series(const ConjugacyTransform& transform);
double conjugacy_normalized_action(const ConjugacyTransform& transform, double p1, double q1,
                                   double q2);

// Original coordinates as functions of the normalized ones: q_i = Q_i + S_i and
// p_i - omega_i = P_i + T_i for the first n1 actions.
struct ForwardMap {
  std::vector<Series> p_shift;
  std::vector<Series> q_shift;
};
ForwardMap forward_map(const ConjugacyTransform& transform);

struct TorusCheck {
  int r = 0;
  double max_abs_P1 = 0.0;
};
std::vector<TorusCheck> verify_torus(const ConjugacyTransform& transform,
                                     const dynamics::ForcedPendulumParams& params,
                                     const std::vector<int>& r_list, int n_points,
                                     int threads = 1);

struct CurvePoint {
  double q1 = 0.0;
  double p1 = 0.0;
};

struct BasinEstimate {
  double B = 0.0;
  double radius = 0.0;
  bool unbounded = false;
  std::vector<CurvePoint> upper;
  std::vector<CurvePoint> lower;
};

BasinEstimate basin_estimate(const NormalizationState& state,
                             const ConjugacyTransform& transform, int n_curve_samples);

// Original-coordinate point on the section for normalized (P1, Q1), Q2 = 0.
CurvePoint normalized_to_original(const ForwardMap& map, const std::vector<double>& omega,
                                  double P1, double Q1);

nlohmann::json step_to_json(const StepRecord& record);
std::string norms_to_csv(const std::vector<StepRecord>& history);

}  // namespace kamtools::kolmogorov
