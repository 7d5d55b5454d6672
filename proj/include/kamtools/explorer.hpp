#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace kamtools::explorer {

enum class SystemKind { DissStdMap, ForcedPendulum };

const char* system_name(SystemKind system);

// Analysis length used when a caller passes N = 0.
int default_full_N(SystemKind system);
int default_probe_N(SystemKind system);

// Offset of the orbit start from (Omega, 0). The default reproduces the
// usual (y0, x0) = (Omega, 0); a nonzero offset picks another basin when
// several attractors coexist.
struct StartOffset {
  double action = 0.0;
  double angle = 0.0;
};

struct FrequencyScanConfig {
  SystemKind system = SystemKind::DissStdMap;
  double epsilon = 0.0;
  double eta = 0.0;
  double Omega_min = 0.0;
  double Omega_max = 1.0;
  int n_points = 2;
  int N = 0;
  std::optional<double> target_omega1;
  StartOffset start;
  int threads = 1;
  // Polled before each sample; once it returns true the scan stops and the
  // result is cut back to the samples completed before the first skipped one.
  std::function<bool()> cancelled;
};

struct FrequencyMapSample {
  double Omega = 0.0;
  double omega1 = 0.0;
  double amplitude = 0.0;
  bool relaxed = false;
  bool plateau_suspect = false;
  std::optional<std::string> error;
};

// The returned frequency is folded into [0, pi] for the map and into
// (-1/2, 1/2] per unit time for the pendulum.
FrequencyMapSample measure_omega1(SystemKind system, double epsilon, double eta,
                                  double Omega, int N,
                                  const StartOffset& start = {});

std::vector<FrequencyMapSample> scan_frequency_map(const FrequencyScanConfig& cfg);

// Marks runs of >= min_run consecutive samples equal within tol.
void mark_plateaus(std::vector<FrequencyMapSample>& samples, int min_run = 3,
                   double tol = 1e-9);

enum class Verdict { TorusPersists, TorusBroken, Inconclusive };

const char* verdict_name(Verdict v);

struct VerdictConfig {
  int m = 8;
  double jump_tol = 0.05;
  double gap_tol = 0.2;
  int plateau_len = 3;
  double plateau_tol = 1e-9;
};

Verdict regularity_verdict(const std::vector<FrequencyMapSample>& samples,
                           double omega1_star, const VerdictConfig& cfg = {});

struct ThresholdConfig {
  double target_uncertainty = 1e-3;
  int probe_N = 0;             // 0: 2^16 (map) or 2^14 (pendulum)
  int full_N = 0;              // 0: 2^19 (map) or 2^16 (pendulum)
  bool confirm = true;         // re-check the final bracket at full_N
  double window_halfwidth = 1e-8;
  std::optional<std::pair<double, double>> omega_bracket;
  int max_widen = 4;
  int max_probes = 64;
  StartOffset start;
  int threads = 1;
  VerdictConfig verdict;
};

struct ProbeRecord {
  double epsilon = 0.0;
  int N = 0;
  double Omega_center = 0.0;
  double halfwidth = 0.0;
  Verdict verdict = Verdict::Inconclusive;
  bool retried = false;
  std::string stage;
};

struct ThresholdResult {
  double omega1_star = 0.0;
  double eta = 0.0;
  double eps_lo = 0.0;
  double eps_hi = 0.0;
  double eps_c = 0.0;
  double uncertainty = 0.0;
  std::vector<ProbeRecord> probes;
};

struct ProbeOutcome {
  Verdict verdict = Verdict::Inconclusive;
  double Omega_center = 0.0;
  std::vector<FrequencyMapSample> window;
};

// One regularity probe: locate the crossing of omega1* by bisection in Omega
// inside `bracket`, then sample 2m+1 points of half-width `halfwidth` around it.
ProbeOutcome probe_regularity(SystemKind system, double epsilon, double eta,
                              double omega1_star, std::pair<double, double> bracket,
                              double halfwidth, int N, const VerdictConfig& vcfg,
                              int threads = 1, const StartOffset& start = {});

ThresholdResult find_threshold(double omega1_star, double eta, SystemKind system,
                               std::pair<double, double> eps_bracket,
                               const ThresholdConfig& cfg = {});

struct NewtonConfig {
  double alpha = 1e-6;
  double beta = 1e-15;
  int max_iter = 20;
  double min_slope = 1e-3;
  int N = 0;  // 0: full default for the system
};

struct NewtonIterate {
  double Omega = 0.0;
  double omega1 = 0.0;
  double relative_correction = 0.0;
};

struct NewtonResult {
  double Omega_star = 0.0;
  int iterations = 0;
  std::vector<NewtonIterate> history;
};

NewtonResult invert_frequency_map(double omega1_star, SystemKind system,
                                  double epsilon, double eta, double Omega0,
                                  const NewtonConfig& cfg = {});

struct DiophantineParams {
  double gamma = 0.1;
  double tau = 1.0;
};

bool diophantine_check(const std::vector<double>& omega,
                       const DiophantineParams& params, int kmax);

std::string scan_to_csv(const std::vector<FrequencyMapSample>& samples);
nlohmann::json threshold_to_json(const ThresholdResult& result);
nlohmann::json newton_to_json(const NewtonResult& result);

}  // namespace kamtools::explorer
