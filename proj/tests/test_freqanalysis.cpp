#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>

#include "kamtools/dynamics.hpp"
#include "kamtools/error.hpp"
#include "kamtools/freqanalysis.hpp"

using namespace kamtools;
using namespace kamtools::freq;

namespace {

const double kOmega1 = (3.0 - std::sqrt(5.0)) / 2.0;

OrbitSignal sample(const std::function<cplx(double)>& z, int N, double delta = 1.0,
                   double t0 = 0.0) {
  OrbitSignal s;
  s.N = N;
  s.delta = delta;
  s.T = N * delta / 2.0;
  s.t0 = t0;
  s.samples.resize(static_cast<size_t>(N) + 1);
  for (int n = 0; n <= N; ++n) s.samples[static_cast<size_t>(n)] = z(t0 - s.T + n * delta);
  return s;
}

cplx line(double freq, double t) { return {std::cos(freq * t), std::sin(freq * t)}; }

}  // namespace

TEST(Hanning, Values) {
  EXPECT_DOUBLE_EQ(hanning_weight(0.0), 2.0);
  EXPECT_NEAR(hanning_weight(1.0), 0.0, 1e-16);
  EXPECT_NEAR(hanning_weight(-1.0), 0.0, 1e-16);
  EXPECT_DOUBLE_EQ(hanning_weight(0.3), hanning_weight(-0.3));
  EXPECT_THROW(hanning_weight(1.5), Error);
}

TEST(Hanning, TrapezoidalIntegralIsTwo) {
  for (int N : {256, 1000, 4096}) {
    double acc = 0.0;
    for (int n = 0; n <= N; ++n) {
      const double w = hanning_weight(-1.0 + 2.0 * n / N);
      acc += (n == 0 || n == N) ? 0.5 * w : w;
    }
    EXPECT_NEAR(acc * 2.0 / N, 2.0, 1e-12) << N;
  }
}

TEST(Amplitude, ResonantSelfOverlap) {
  const double nu = 0.7;
  const auto s = sample([&](double t) { return line(nu, t); }, 1024, 1.0, 300.0);
  const cplx a = amplitude_at(s, nu);
  EXPECT_GT(std::abs(a), 0.99);
  EXPECT_NEAR(a.real(), 1.0, 1e-2);
}

TEST(Amplitude, ZeroSignal) {
  const auto s = sample([](double) { return cplx(0.0); }, 512);
  EXPECT_EQ(amplitude_at(s, 0.3), cplx(0.0));
}

TEST(Amplitude, SidelobeDecayMatchesClosedForm) {
  // (1/2T) int_{-T}^{T} e^{i d t} (1 + cos(pi t/T)) dt with d = nu - sigma.
  const double nu = 0.5;
  const int N = 4096;
  const auto s = sample([&](double t) { return line(nu, t); }, N);
  const double T = s.T;
  for (double sigma : {0.3, 0.1, -0.4}) {
    const double d = nu - sigma;
    const double a = d * T;
    const double exact = std::sin(a) / a + 0.5 * (std::sin(a + std::numbers::pi) / (a + std::numbers::pi) +
                                                  std::sin(a - std::numbers::pi) / (a - std::numbers::pi));
    const cplx got = amplitude_at(s, sigma);
    EXPECT_NEAR(got.real(), exact, 1e-9);
    EXPECT_LT(std::abs(got), 10.0 / std::pow(std::abs(a), 3));
  }
}

TEST(Principal, SingleLine) {
  const double nu = 0.381966;
  const auto s = sample([&](double t) { return line(nu, t); }, 1 << 14);
  EXPECT_NEAR(principal_frequency(s, {}), nu, 1e-10);
}

TEST(Principal, ZeroSignalHasNoPeak) {
  const auto s = sample([](double) { return cplx(0.0); }, 512);
  try {
    principal_frequency(s, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoPeak);
  }
}

TEST(Principal, InverseQuarticAccuracy) {
  // The leakage error oscillates with the phase d*T of the second line
  // (d = 1); T = m*pi keeps that phase fixed while T doubles.
  auto z = [](double t) { return line(kOmega1, t) + 0.3 * line(kOmega1 - 1.0, t); };
  std::vector<double> err;
  for (int m : {16, 32, 64, 128}) {
    const int N = 8 * m;
    const double delta = 2.0 * std::numbers::pi * m / N;
    err.push_back(std::abs(principal_frequency(sample(z, N, delta), {}) - kOmega1));
  }
  for (size_t i = 0; i + 1 < err.size(); ++i) {
    const double order = std::log2(err[i] / err[i + 1]);
    EXPECT_GE(order, 3.5) << i;
    EXPECT_LE(order, 4.5) << i;
  }
}

TEST(Principal, HintRestrictsSearch) {
  auto z = [](double t) { return line(0.2, t) + 0.5 * line(-0.9, t); };
  const auto s = sample(z, 4096);
  EXPECT_NEAR(principal_frequency(s, {}), 0.2, 1e-10);
  EXPECT_NEAR(principal_frequency(s, {}, -0.9), -0.9, 1e-10);
}

TEST(Decompose, TwoLines) {
  auto z = [](double t) { return 2.0 * line(0.3, t) + line(0.7, t); };
  const auto spec = decompose_spectrum(sample(z, 1 << 13, 1.0, 100.0), {});
  ASSERT_GE(spec.lines.size(), 2u);
  EXPECT_NEAR(spec.lines[0].frequency, 0.3, 1e-8);
  EXPECT_NEAR(std::abs(spec.lines[0].amplitude - cplx(2.0)), 0.0, 1e-6);
  EXPECT_NEAR(spec.lines[1].frequency, 0.7, 1e-8);
  EXPECT_NEAR(std::abs(spec.lines[1].amplitude - cplx(1.0)), 0.0, 1e-6);
}

TEST(Decompose, ZeroSignal) {
  const auto spec = decompose_spectrum(sample([](double) { return cplx(0.0); }, 512), {});
  EXPECT_TRUE(spec.lines.empty());
  EXPECT_EQ(spec.residual_norm, 0.0);
}

TEST(Decompose, ResidualAfterAllLines) {
  const double f[] = {0.11, -0.5, 0.93, 1.7, -2.2, 2.9, -1.3, 0.45};
  const cplx c[] = {{1.0, 0.0}, {0.0, 0.7}, {0.5, 0.5}, {-0.3, 0.1},
                    {0.2, 0.0}, {0.1, -0.1}, {0.05, 0.0}, {0.0, 0.02}};
  auto z = [&](double t) {
    cplx acc = 0.0;
    for (int l = 0; l < 8; ++l) acc += c[l] * line(f[l], t);
    return acc;
  };
  const auto s = sample(z, 1 << 14);
  const auto spec = decompose_spectrum(s, {});
  ASSERT_GE(spec.lines.size(), 8u);
  // residual_norm is windowed; compare against the windowed signal norm.
  double wnorm = 0.0;
  for (int n = 0; n <= s.N; ++n) {
    wnorm += hanning_weight(-1.0 + 2.0 * n / s.N) * std::norm(s.samples[static_cast<size_t>(n)]);
  }
  EXPECT_LT(spec.residual_norm / std::sqrt(wnorm), 1e-5);
  for (int l = 0; l < 8; ++l) {
    bool found = false;
    for (const auto& ln : spec.lines) {
      if (std::abs(ln.frequency - f[l]) < 1e-8 && std::abs(ln.amplitude - c[l]) < 1e-6) found = true;
    }
    EXPECT_TRUE(found) << f[l];
  }
}

TEST(Decompose, ShiftCovariance) {
  auto z = [](double t) { return line(0.25, t) + 0.4 * line(-0.6, t); };
  const double mu = 0.137;
  const auto a = decompose_spectrum(sample(z, 4096), {});
  const auto b =
      decompose_spectrum(sample([&](double t) { return z(t) * line(mu, t); }, 4096), {});
  ASSERT_EQ(a.lines.size(), b.lines.size());
  for (size_t i = 0; i < std::min<size_t>(2, a.lines.size()); ++i) {
    EXPECT_NEAR(b.lines[i].frequency - a.lines[i].frequency, mu, 1e-12);
  }
}

TEST(Decompose, Deterministic) {
  auto z = [](double t) { return line(0.25, t) + 0.4 * line(-0.6, t); };
  const auto a = decompose_spectrum(sample(z, 2048), {});
  const auto b = decompose_spectrum(sample(z, 2048), {});
  ASSERT_EQ(a.lines.size(), b.lines.size());
  for (size_t i = 0; i < a.lines.size(); ++i) {
    EXPECT_EQ(a.lines[i].frequency, b.lines[i].frequency);
    EXPECT_EQ(a.lines[i].amplitude, b.lines[i].amplitude);
  }
}

TEST(Decompose, CombinationMatching) {
  const std::vector<double> omega{kOmega1, 1.0};
  auto z = [&](double t) {
    return line(kOmega1, t) + 0.2 * line(2 * kOmega1 - 1.0, t) + 0.05 * line(-kOmega1, t);
  };
  const auto spec = decompose_spectrum(sample(z, 1 << 14), {}, omega);
  ASSERT_GE(spec.lines.size(), 3u);
  for (size_t i = 0; i < 3; ++i) {
    ASSERT_TRUE(spec.lines[i].combo.has_value()) << i;
    const auto& k = *spec.lines[i].combo;
    EXPECT_NEAR(k[0] * omega[0] + k[1] * omega[1], spec.lines[i].frequency, 1e-8);
  }
  EXPECT_EQ((*spec.lines[1].combo), (std::vector<int>{2, -1}));
}

TEST(MatchCombination, Bounds) {
  const std::vector<double> omega{kOmega1, 1.0};
  EXPECT_FALSE(match_combination(0.123456, omega, 3, 1e-8).has_value());
  const auto k = match_combination(3 * kOmega1 - 2.0, omega, 10, 1e-12);
  ASSERT_TRUE(k.has_value());
  EXPECT_EQ(*k, (std::vector<int>{3, -2}));
}

TEST(MapSignal, UnperturbedRotation) {
  const double Omega = 1.234;
  const auto orbit = dynamics::std_map_orbit({Omega, 0.0}, 4096, {0.0, 0.1, Omega});
  const auto s = orbit_signal_from_map(orbit, 1.0, 0, 4096);
  EXPECT_NEAR(principal_frequency(s, {}), Omega, 1e-10);
  const auto h = orbit_signal_from_map(orbit, 0.5, 0, 4096);
  EXPECT_NEAR(principal_frequency(h, {}), 2.0 * Omega, 1e-9);
  EXPECT_DOUBLE_EQ(s.t0, 2048.0);
  EXPECT_DOUBLE_EQ(s.T, 2048.0);
}

TEST(MapSignal, WindowChecks) {
  const auto orbit = dynamics::std_map_orbit({0.5, 0.0}, 100, {0.0, 0.1, 0.5});
  const auto s = orbit_signal_from_map(orbit, 1.0, 0, 100);
  EXPECT_EQ(s.samples.size(), 101u);
  try {
    orbit_signal_from_map(orbit, 1.0, 10, 100);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientData);
  }
}

TEST(SpectrumJson, Fields) {
  auto z = [](double t) { return line(0.3, t); };
  const auto j = spectrum_to_json(decompose_spectrum(sample(z, 1024), {}, std::vector<double>{0.3}));
  ASSERT_TRUE(j.contains("lines"));
  EXPECT_TRUE(j["lines"][0].contains("zeta"));
  EXPECT_EQ(j["lines"][0]["k"][0], 1);
}
