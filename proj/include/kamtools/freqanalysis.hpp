#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "json.hpp"

#include "kamtools/dynamics.hpp"

namespace kamtools::freq {

using cplx = std::complex<double>;

// Uniform samples z(t_n), t_n = t0 - T + n*delta, n = 0..N.
struct OrbitSignal {
  std::vector<cplx> samples;
  double delta = 1.0;
  double t0 = 0.0;
  double T = 0.0;
  int N = 0;
};

struct SpectralLine {
  cplx amplitude;
  double frequency = 0.0;
  std::optional<std::vector<int>> combo;
};

struct FrequencySpectrum {
  std::vector<SpectralLine> lines;
  double residual_norm = 0.0;
};

struct AnalysisConfig {
  int coarse_bins = 0;  // 0 means one bin per Fourier mode (N bins)
  double refine_tol = 1e-13;
  int max_lines = 32;
  double combo_tol = 1e-8;
  int max_combo_order = 50;
  int hint_halfwidth_bins = 16;  // sub-band half width used with a hint
};

double hanning_weight(double u);

cplx amplitude_at(const OrbitSignal& signal, double sigma);

double principal_frequency(const OrbitSignal& signal, const AnalysisConfig& cfg,
                           std::optional<double> search_hint = std::nullopt);

FrequencySpectrum decompose_spectrum(
    const OrbitSignal& signal, const AnalysisConfig& cfg,
    const std::optional<std::vector<double>>& base_frequencies = std::nullopt);

// z_n = y_n exp(i x_n) over n in [W, W+N].
OrbitSignal orbit_signal_from_map(const std::vector<dynamics::MapState>& iterates,
                                  double delta, int W, int N);

// Integer vector k with |k|_1 <= max_order minimising |zeta - k.omega|,
// returned only when the mismatch is below tol.
std::optional<std::vector<int>> match_combination(
    double zeta, const std::vector<double>& omega, int max_order, double tol);

nlohmann::json spectrum_to_json(const FrequencySpectrum& spectrum);

}  // namespace kamtools::freq
