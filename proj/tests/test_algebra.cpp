#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "kamtools/algebra.hpp"
#include "kamtools/error.hpp"

using namespace kamtools;
using namespace kamtools::algebra;

namespace {

SeriesContext wide_ctx() {
  SeriesContext c;
  c.n1 = 1;
  c.n2 = 1;
  c.K = 2;
  c.trunc_fourier = 60;
  c.trunc_action = 8;
  return c;
}

// Sparse real series with at most `terms` canonical terms.
Series random_series(std::mt19937_64& rng, const SeriesContext& ctx, int terms, int max_deg,
                     int max_k, double scale = 1.0) {
  std::uniform_int_distribution<int> deg(0, max_deg), har(-max_k, max_k);
  std::uniform_real_distribution<double> val(-scale, scale);
  Series s(ctx);
  for (int t = 0; t < terms; ++t) {
    std::vector<int> j(static_cast<size_t>(ctx.n1)), k(static_cast<size_t>(ctx.n()));
    for (auto& v : j) v = deg(rng);
    for (auto& v : k) v = har(rng);
    s.add(j, k, Complex(val(rng), val(rng)));
  }
  return s;
}

double max_abs(const Series& s) {
  double m = 0.0;
  for (const auto& [key, c] : s.raw()) m = std::max(m, std::abs(c));
  return m;
}

Series cos_q(const SeriesContext& ctx, std::vector<int> k, double amp = 1.0, int j1 = 0) {
  Series s(ctx);
  std::vector<int> j(static_cast<size_t>(ctx.n1), 0);
  j[0] = j1;
  s.add(j, k, 0.5 * amp);
  return s;
}

Series sin_q(const SeriesContext& ctx, std::vector<int> k, double amp = 1.0, int j1 = 0) {
  Series s(ctx);
  std::vector<int> j(static_cast<size_t>(ctx.n1), 0);
  j[0] = j1;
  s.add(j, k, Complex(0.0, -0.5 * amp));
  return s;
}

Series monomial(const SeriesContext& ctx, int j1, double c = 1.0) {
  Series s(ctx);
  std::vector<int> j(static_cast<size_t>(ctx.n1), 0);
  j[0] = j1;
  s.add(j, std::vector<int>(static_cast<size_t>(ctx.n()), 0), c);
  return s;
}

void expect_same(const Series& a, const Series& b, double tol) {
  EXPECT_LE(max_abs(subtract(a, b)), tol);
}

}  // namespace

TEST(Series, StorageMirrorsConjugates) {
  const auto ctx = wide_ctx();
  Series s(ctx);
  s.add({1}, {-2, 1}, Complex(0.3, 0.4));
  EXPECT_EQ(s.size(), 1u);
  EXPECT_EQ(s.coeff({1}, {-2, 1}), Complex(0.3, 0.4));
  EXPECT_EQ(s.coeff({1}, {2, -1}), Complex(0.3, -0.4));
  s.add({0}, {0, 0}, Complex(1.0, 5.0));
  EXPECT_EQ(s.coeff({0}, {0, 0}), Complex(1.0, 0.0));
}

TEST(Series, TruncationOnInsert) {
  SeriesContext ctx = wide_ctx();
  ctx.trunc_fourier = 3;
  ctx.trunc_action = 1;
  Series s(ctx);
  s.add({0}, {2, 2}, 1.0);
  s.add({2}, {1, 0}, 1.0);
  s.add({1}, {1, 2}, 1.0);
  EXPECT_EQ(s.size(), 1u);
}

TEST(Series, RealityUnderEvaluation) {
  std::mt19937_64 rng(11);
  const auto ctx = wide_ctx();
  for (int trial = 0; trial < 20; ++trial) {
    const Series a = random_series(rng, ctx, 8, 2, 3);
    const Series b = random_series(rng, ctx, 8, 2, 3);
    for (const Series& s : {multiply(a, b), poisson_bracket(a, b), partial_q(a, 1)}) {
      const double p = 0.3, q1 = 1.1, q2 = -0.4;
      Complex direct = 0.0;
      for (const auto& t : s.terms()) {
        const Complex e = std::polar(1.0, t.k[0] * q1 + t.k[1] * q2) * std::pow(p, t.j[0]);
        direct += t.c * e;
        if (t.k[0] != 0 || t.k[1] != 0) direct += std::conj(t.c) * std::conj(e);
      }
      EXPECT_NEAR(direct.imag(), 0.0, 1e-12);
      EXPECT_NEAR(direct.real(), s.evaluate({p}, {q1, q2}), 1e-12);
    }
  }
}

TEST(Series, AddScale) {
  std::mt19937_64 rng(3);
  const auto ctx = wide_ctx();
  const Series a = random_series(rng, ctx, 10, 2, 4);
  expect_same(add(a, Series(ctx)), a, 0.0);
  EXPECT_TRUE(add(a, scale(a, -1.0)).empty());
  const Series five = add(cos_q(ctx, {1, 0}, 2.0), cos_q(ctx, {1, 0}, 3.0));
  EXPECT_EQ(five.coeff({0}, {1, 0}), Complex(2.5));
  EXPECT_EQ(five.coeff({0}, {-1, 0}), Complex(2.5));
  SeriesContext other = ctx;
  other.trunc_fourier = 10;
  try {
    add(a, Series(other));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ContextMismatch);
  }
}

TEST(Series, MultiplyIdentities) {
  const auto ctx = wide_ctx();
  const Series c1 = cos_q(ctx, {1, 0});
  Series expect = cos_q(ctx, {2, 0}, 0.5);
  expect.add({0}, {0, 0}, 0.5);
  expect_same(multiply(c1, c1), expect, 1e-16);
  expect_same(multiply(monomial(ctx, 1), monomial(ctx, 1)), monomial(ctx, 2), 0.0);
  const Series prod = multiply(c1, cos_q(ctx, {1, -1}));
  expect_same(prod, add(cos_q(ctx, {2, -1}, 0.5), cos_q(ctx, {0, 1}, 0.5)), 1e-16);
}

TEST(Series, Derivatives) {
  const auto ctx = wide_ctx();
  expect_same(partial_q(cos_q(ctx, {1, 0}), 0), scale(sin_q(ctx, {1, 0}), -1.0), 1e-16);
  expect_same(partial_p(monomial(ctx, 2, 0.5), 0), monomial(ctx, 1), 0.0);
  expect_same(partial_q(cos_q(ctx, {1, -1}, 1.0, 1), 1), sin_q(ctx, {1, -1}, 1.0, 1), 1e-16);
  EXPECT_THROW(partial_q(cos_q(ctx, {1, 0}), 2), Error);
  EXPECT_THROW(partial_p(cos_q(ctx, {1, 0}), 5), Error);
}

TEST(Bracket, CanonicalPair) {
  const auto ctx = wide_ctx();
  expect_same(poisson_bracket(monomial(ctx, 1), sin_q(ctx, {1, 0})), scale(cos_q(ctx, {1, 0}), -1.0),
              1e-16);
}

TEST(Bracket, ActionFormEigenfunction) {
  const auto ctx = wide_ctx();
  const std::vector<double> omega{0.381966, 1.0};
  Series e(ctx);
  e.add({0}, {3, -1}, 1.0);
  const Series got = bracket_with_action_form(e, omega);
  EXPECT_NEAR(std::abs(got.coeff({0}, {3, -1}) - Complex(0.0, 3 * omega[0] - omega[1])), 0.0,
              1e-15);
  Series lin(ctx);
  lin.add({1}, {0, 0}, omega[0]);
  // The action form only carries n1 actions here, so compare on q1 only.
  Series e1(ctx);
  e1.add({0}, {3, 0}, 1.0);
  expect_same(poisson_bracket(e1, lin), bracket_with_action_form(e1, {omega[0], 0.0}), 1e-15);
}

TEST(Bracket, AngleForm) {
  const auto ctx = wide_ctx();
  const Series g = multiply(monomial(ctx, 2), cos_q(ctx, {1, 1}));
  expect_same(bracket_with_angle_form(g, {0.7}), scale(partial_p(g, 0), -0.7), 1e-16);
}

TEST(Bracket, Antisymmetry) {
  std::mt19937_64 rng(5);
  const auto ctx = wide_ctx();
  for (int trial = 0; trial < 100; ++trial) {
    const Series a = random_series(rng, ctx, 10, 2, 3);
    const Series b = random_series(rng, ctx, 10, 2, 3);
    expect_same(poisson_bracket(a, b), scale(poisson_bracket(b, a), -1.0), 1e-12);
  }
}

TEST(Bracket, Jacobi) {
  std::mt19937_64 rng(6);
  const auto ctx = wide_ctx();
  for (int trial = 0; trial < 100; ++trial) {
    const Series a = random_series(rng, ctx, 10, 2, 3);
    const Series b = random_series(rng, ctx, 10, 2, 3);
    const Series c = random_series(rng, ctx, 10, 2, 3);
    const Series j = add(add(poisson_bracket(poisson_bracket(a, b), c),
                             poisson_bracket(poisson_bracket(b, c), a)),
                         poisson_bracket(poisson_bracket(c, a), b));
    EXPECT_LE(max_abs(j), 1e-12) << trial;
  }
}

TEST(Bracket, Leibniz) {
  std::mt19937_64 rng(8);
  const auto ctx = wide_ctx();
  for (int trial = 0; trial < 100; ++trial) {
    const Series a = random_series(rng, ctx, 10, 2, 3);
    const Series b = random_series(rng, ctx, 10, 2, 3);
    const Series c = random_series(rng, ctx, 10, 2, 3);
    const Series lhs = poisson_bracket(multiply(a, b), c);
    const Series rhs = add(multiply(a, poisson_bracket(b, c)), multiply(poisson_bracket(a, c), b));
    EXPECT_LE(max_abs(subtract(lhs, rhs)), 1e-12) << trial;
  }
}

TEST(Lie, AngleOnlyGeneratorTerminates) {
  const auto ctx = wide_ctx();
  const double w1 = 0.381966;
  const Series g = monomial(ctx, 1, w1);
  const Series chi = add(cos_q(ctx, {1, 0}, 0.2), sin_q(ctx, {2, -1}, 0.1));
  const Series got = lie_series_apply(g, {chi, {}});
  // L_chi(w1 p1) = {w1 p1, chi} = -w1 dchi/dq1; the next bracket vanishes.
  expect_same(got, subtract(g, scale(partial_q(chi, 0), w1)), 1e-16);
  EXPECT_TRUE(lie_derivative(lie_derivative(g, {chi, {}}), {chi, {}}).empty());
}

TEST(Lie, ZeroGeneratorIsIdentity) {
  std::mt19937_64 rng(9);
  const auto ctx = wide_ctx();
  const Series g = random_series(rng, ctx, 10, 2, 3);
  expect_same(lie_series_apply(g, {Series(ctx), {0.0}}), g, 0.0);
}

TEST(Lie, InverseComposition) {
  std::mt19937_64 rng(10);
  SeriesContext ctx = wide_ctx();
  ctx.trunc_action = 2;
  for (int trial = 0; trial < 20; ++trial) {
    const Series g = random_series(rng, ctx, 10, 2, 3);
    Series chi = random_series(rng, ctx, 6, 1, 3);
    chi = scale(chi, 1e-2 / chi.l1_norm());
    const Generator gen{chi, {0.003}};
    const Series back = lie_series_apply(lie_series_apply(g, gen), negate(gen));
    EXPECT_LE(max_abs(subtract(back, g)), 1e-10) << trial;
  }
}

TEST(Lie, NonAdmissible) {
  const auto ctx = wide_ctx();
  try {
    lie_series_apply(monomial(ctx, 1), {monomial(ctx, 2), {}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonAdmissibleGenerator);
  }
}

TEST(Classes, Placement) {
  const auto ctx = wide_ctx();
  Series s(ctx);
  s.add({1}, {3, 0}, 1.0);
  s.add({2}, {0, 0}, 0.5);
  const Family f = classify(s);
  EXPECT_TRUE(f.count({1, 2}));
  EXPECT_TRUE(f.count({2, 0}));
  EXPECT_EQ(class_index(3, 2), 2);
  EXPECT_EQ(class_index(0, 2), 0);
  EXPECT_EQ(class_index(4, 2), 2);
  EXPECT_EQ(class_index(5, 2), 3);
}

TEST(Classes, ReorderIdempotent) {
  std::mt19937_64 rng(12);
  const auto ctx = wide_ctx();
  Family f;
  f[{0, 5}] = random_series(rng, ctx, 10, 2, 6);
  f[{1, 1}] = random_series(rng, ctx, 10, 2, 6);
  const Family once = reorder(f);
  const Family twice = reorder(once);
  ASSERT_EQ(once.size(), twice.size());
  for (const auto& [idx, s] : once) {
    expect_same(s, twice.at(idx), 0.0);
    for (const auto& t : s.terms()) {
      int h = 0, d = 0;
      for (int v : t.k) h += std::abs(v);
      for (int v : t.j) d += v;
      EXPECT_EQ(idx.first, d);
      EXPECT_EQ(idx.second, class_index(h, ctx.K));
    }
  }
  expect_same(flatten(once, ctx), flatten(f, ctx), 1e-15);
}

TEST(Classes, ProductStaysInClassSum) {
  std::mt19937_64 rng(13);
  const auto ctx = wide_ctx();
  for (int trial = 0; trial < 20; ++trial) {
    const Family fa = classify(random_series(rng, ctx, 6, 2, 5));
    const Family fb = classify(random_series(rng, ctx, 6, 2, 5));
    for (const auto& [ia, a] : fa) {
      for (const auto& [ib, b] : fb) {
        for (const auto& [ip, p] : classify(multiply(a, b))) {
          EXPECT_EQ(ip.first, ia.first + ib.first);
          EXPECT_LE(ip.second, ia.second + ib.second);
        }
      }
    }
  }
}

TEST(Norm, Examples) {
  const auto ctx = wide_ctx();
  EXPECT_DOUBLE_EQ(cos_q(ctx, {1, 0}).l1_norm(), 1.0);
  EXPECT_DOUBLE_EQ(Series(ctx).l1_norm(), 0.0);
  const Series pert = add(cos_q(ctx, {1, 0}, 0.03), cos_q(ctx, {1, -1}, 0.03));
  EXPECT_NEAR(pert.l1_norm(), 0.06, 1e-17);
}

TEST(Truncation, NarrowProductIsWideProductCut) {
  std::mt19937_64 rng(14);
  SeriesContext lo = wide_ctx(), hi = wide_ctx();
  lo.trunc_fourier = 6;
  hi.trunc_fourier = 12;
  auto recontext = [](const Series& s, const SeriesContext& ctx) {
    Series out(ctx);
    for (const auto& t : s.terms()) out.add(t.j, t.k, t.c);
    return out;
  };
  for (int trial = 0; trial < 20; ++trial) {
    const Series a = random_series(rng, lo, 8, 1, 4);
    const Series b = random_series(rng, lo, 8, 1, 4);
    const Series narrow = multiply(a, b);
    const Series wide = multiply(recontext(a, hi), recontext(b, hi));
    EXPECT_LE(max_abs(subtract(recontext(wide, lo), narrow)), 1e-14);
    EXPECT_LE(narrow.max_harmonic(), 6);
    EXPECT_GE(wide.size(), narrow.size());
  }
}

TEST(Serialization, ExactRoundTrip) {
  std::mt19937_64 rng(15);
  const auto ctx = wide_ctx();
  for (int trial = 0; trial < 20; ++trial) {
    const Series a = random_series(rng, ctx, 12, 3, 8, 1e3);
    const Series b = from_text(to_text(a));
    EXPECT_EQ(b.context(), a.context());
    const auto ta = a.terms(), tb = b.terms();
    ASSERT_EQ(ta.size(), tb.size());
    for (size_t i = 0; i < ta.size(); ++i) {
      EXPECT_EQ(ta[i].j, tb[i].j);
      EXPECT_EQ(ta[i].k, tb[i].k);
      EXPECT_EQ(ta[i].c, tb[i].c);
    }
  }
  EXPECT_THROW(from_text("not a series"), Error);
}

TEST(Context, Validation) {
  SeriesContext c;
  c.n1 = 0;
  EXPECT_THROW(c.validate(), Error);
  c = SeriesContext{};
  c.n2 = 4;
  EXPECT_THROW(c.validate(), Error);
  EXPECT_NO_THROW(SeriesContext{}.validate());
}
