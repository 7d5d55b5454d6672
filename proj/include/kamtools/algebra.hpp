#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace kamtools::algebra {

using Complex = std::complex<double>;

// n1 actions enter the polynomials, n = n1 + n2 angles. |k| is the l1 norm of
// the harmonic; terms with |k| > trunc_fourier or degree > trunc_action are
// discarded on insertion.
struct SeriesContext {
  int n1 = 1;
  int n2 = 1;
  int K = 2;
  int trunc_fourier = 122;
  int trunc_action = 2;

  int n() const { return n1 + n2; }
  void validate() const;
  bool operator==(const SeriesContext&) const = default;
};

inline constexpr double kDropTol = 1e-30;
inline constexpr int kMaxDim = 4;
inline constexpr int kMaxDegree = 15;
inline constexpr int kMaxHarmonic = 2047;

struct Term {
  std::vector<int> j;
  std::vector<int> k;
  Complex c;
};

// Real function sum c_{j,k} p^j exp(i k.q). Only the half-lattice (k = 0 or
// first nonzero component positive) is stored; c_{j,-k} = conj(c_{j,k}).
class Series {
 public:
  Series() = default;
  explicit Series(const SeriesContext& ctx);

  const SeriesContext& context() const { return ctx_; }

  // Adds c at (j, k) and conj(c) at (j, -k). At k = 0 only Re(c) is kept.
  void add(const std::vector<int>& j, const std::vector<int>& k, Complex c);
  // Full-lattice coefficient, mirrored on read.
  Complex coeff(const std::vector<int>& j, const std::vector<int>& k) const;

  // Canonical terms sorted by (degree, |k|, j, k).
  std::vector<Term> terms() const;
  size_t size() const { return map_.size(); }
  bool empty() const { return map_.empty(); }

  // Sum of |c| over the full lattice (both members of a conjugate pair).
  double l1_norm() const;
  int max_degree() const;
  int max_harmonic() const;
  double evaluate(const std::vector<double>& p, const std::vector<double>& q) const;

  // Terms with degree l (or any degree if l < 0) and class s (any if s < 0).
  Series select(int l, int s = -1) const;
  Series angle_free() const;
  Series angle_dependent() const;

  void prune(double tol = kDropTol);

  // Raw access for the arithmetic kernels.
  using Map = std::unordered_map<std::uint64_t, Complex>;
  const Map& raw() const { return map_; }
  void add_raw(std::uint64_t key, Complex c);

 private:
  SeriesContext ctx_;
  Map map_;
};

// Packed key: 4 bits per action exponent, 12 bits (offset) per harmonic.
std::uint64_t pack_key(const int* j, int n1, const int* k, int n);
void unpack_key(std::uint64_t key, int n1, int n, int* j, int* k);
int key_degree(std::uint64_t key, int n1);
int key_harmonic(std::uint64_t key, int n1, int n);
int class_index(int harmonic, int K);

Series add(const Series& a, const Series& b);
Series subtract(const Series& a, const Series& b);
Series scale(const Series& a, double factor);
Series multiply(const Series& a, const Series& b);
Series partial_q(const Series& a, int i);
Series partial_p(const Series& a, int i);

// {g, chi} = sum_i dg/dq_i dchi/dp_i - dg/dp_i dchi/dq_i.
Series poisson_bracket(const Series& g, const Series& chi);
// {g, a.p} with a over all n actions: sum_i a_i dg/dq_i.
Series bracket_with_action_form(const Series& g, const std::vector<double>& a);
// {g, xi.q} with xi over the first n1 angles: -sum_i xi_i dg/dp_i.
Series bracket_with_angle_form(const Series& g, const std::vector<double>& xi);

// chi + xi.q, with chi of action degree at most one.
struct Generator {
  Series chi;
  std::vector<double> xi;
};

Generator negate(const Generator& g);
bool is_admissible(const Generator& g);
Series lie_derivative(const Series& g, const Generator& gen);
// sum_{j<=J} L^j g / j!; stops at order_cap, when the next term vanishes, or
// when its norm drops below rel_tol times the running sum.
Series lie_series_apply(const Series& g, const Generator& gen, int order_cap = 64,
                        double rel_tol = 0.0);

// Class families indexed by (l, s).
using Family = std::map<std::pair<int, int>, Series>;

Family classify(const Series& a);
Family reorder(const Family& family);
Series flatten(const Family& family, const SeriesContext& ctx);

std::string to_text(const Series& a);
Series from_text(const std::string& text);

}  // namespace kamtools::algebra
