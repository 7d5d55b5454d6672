#include "kamtools/algebra.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "kamtools/error.hpp"

namespace kamtools::algebra {

namespace {

constexpr int kJBits = 4;
constexpr int kKBits = 12;
constexpr int kKOffset = 1 << (kKBits - 1);
constexpr int kKShift = kJBits * kMaxDim;

struct Decoded {
  std::array<int, kMaxDim> j{};
  std::array<int, kMaxDim> k{};
  Complex c;
};

bool canonical(const int* k, int n) {
  for (int i = 0; i < n; ++i) {
    if (k[i] != 0) return k[i] > 0;
  }
  return true;
}

bool is_zero_harmonic(const int* k, int n) {
  for (int i = 0; i < n; ++i) {
    if (k[i] != 0) return false;
  }
  return true;
}

void require_same(const Series& a, const Series& b) {
  if (!(a.context() == b.context())) {
    throw Error(ErrorCode::ContextMismatch, "series belong to different contexts");
  }
}

std::vector<Decoded> decode(const Series& a) {
  const auto& ctx = a.context();
  std::vector<Decoded> out;
  out.reserve(a.size());
  for (const auto& [key, c] : a.raw()) {
    Decoded d;
    unpack_key(key, ctx.n1, ctx.n(), d.j.data(), d.k.data());
    d.c = c;
    out.push_back(d);
  }
  return out;
}

// Both members of every conjugate pair.
std::vector<Decoded> decode_full(const Series& a) {
  const int n = a.context().n();
  std::vector<Decoded> half = decode(a);
  std::vector<Decoded> out;
  out.reserve(2 * half.size());
  for (const auto& d : half) {
    out.push_back(d);
    if (!is_zero_harmonic(d.k.data(), n)) {
      Decoded m = d;
      for (int i = 0; i < n; ++i) m.k[static_cast<size_t>(i)] = -m.k[static_cast<size_t>(i)];
      m.c = std::conj(d.c);
      out.push_back(m);
    }
  }
  return out;
}

}  // namespace

void SeriesContext::validate() const {
  if (n1 < 1 || n2 < 0 || n() > kMaxDim || K < 1 || trunc_fourier < 0 ||
      trunc_fourier > kMaxHarmonic || trunc_action < 0 || trunc_action > kMaxDegree) {
    throw Error(ErrorCode::InvalidArgument, "invalid series context");
  }
}

std::uint64_t pack_key(const int* j, int n1, const int* k, int n) {
  std::uint64_t key = 0;
  for (int i = 0; i < n1; ++i) {
    key |= static_cast<std::uint64_t>(j[i]) << (kJBits * i);
  }
  for (int i = 0; i < n; ++i) {
    key |= static_cast<std::uint64_t>(k[i] + kKOffset) << (kKShift + kKBits * i);
  }
  return key;
}

void unpack_key(std::uint64_t key, int n1, int n, int* j, int* k) {
  for (int i = 0; i < n1; ++i) {
    j[i] = static_cast<int>((key >> (kJBits * i)) & ((1u << kJBits) - 1));
  }
  for (int i = 0; i < n; ++i) {
    k[i] = static_cast<int>((key >> (kKShift + kKBits * i)) & ((1u << kKBits) - 1)) -
           kKOffset;
  }
}

int key_degree(std::uint64_t key, int n1) {
  int d = 0;
  for (int i = 0; i < n1; ++i) {
    d += static_cast<int>((key >> (kJBits * i)) & ((1u << kJBits) - 1));
  }
  return d;
}

int key_harmonic(std::uint64_t key, int, int n) {
  int h = 0;
  for (int i = 0; i < n; ++i) {
    h += std::abs(static_cast<int>((key >> (kKShift + kKBits * i)) & ((1u << kKBits) - 1)) -
                  kKOffset);
  }
  return h;
}

int class_index(int harmonic, int K) { return (harmonic + K - 1) / K; }

Series::Series(const SeriesContext& ctx) : ctx_(ctx) { ctx_.validate(); }

void Series::add_raw(std::uint64_t key, Complex c) {
  if (key_degree(key, ctx_.n1) > ctx_.trunc_action ||
      key_harmonic(key, ctx_.n1, ctx_.n()) > ctx_.trunc_fourier) {
    return;
  }
  map_[key] += c;
}

void Series::add(const std::vector<int>& j, const std::vector<int>& k, Complex c) {
  const int n = ctx_.n();
  if (static_cast<int>(j.size()) != ctx_.n1 || static_cast<int>(k.size()) != n) {
    throw Error(ErrorCode::IndexOutOfRange, "multi-index has the wrong length");
  }
  for (int v : j) {
    if (v < 0 || v > kMaxDegree) {
      throw Error(ErrorCode::InvalidArgument, "action exponent out of range");
    }
  }
  for (int v : k) {
    if (std::abs(v) > kMaxHarmonic) {
      throw Error(ErrorCode::InvalidArgument, "harmonic out of range");
    }
  }
  if (is_zero_harmonic(k.data(), n)) {
    add_raw(pack_key(j.data(), ctx_.n1, k.data(), n), Complex(c.real(), 0.0));
  } else if (canonical(k.data(), n)) {
    add_raw(pack_key(j.data(), ctx_.n1, k.data(), n), c);
  } else {
    std::vector<int> m(k);
    for (int& v : m) v = -v;
    add_raw(pack_key(j.data(), ctx_.n1, m.data(), n), std::conj(c));
  }
}

Complex Series::coeff(const std::vector<int>& j, const std::vector<int>& k) const {
  const int n = ctx_.n();
  if (static_cast<int>(j.size()) != ctx_.n1 || static_cast<int>(k.size()) != n) {
    throw Error(ErrorCode::IndexOutOfRange, "multi-index has the wrong length");
  }
  for (int v : j) {
    if (v < 0 || v > kMaxDegree) return 0.0;
  }
  for (int v : k) {
    if (std::abs(v) > kMaxHarmonic) return 0.0;
  }
  if (canonical(k.data(), n)) {
    auto it = map_.find(pack_key(j.data(), ctx_.n1, k.data(), n));
    return it == map_.end() ? Complex(0.0) : it->second;
  }
  std::vector<int> m(k);
  for (int& v : m) v = -v;
  auto it = map_.find(pack_key(j.data(), ctx_.n1, m.data(), n));
  return it == map_.end() ? Complex(0.0) : std::conj(it->second);
}

std::vector<Term> Series::terms() const {
  const int n = ctx_.n();
  std::vector<std::pair<std::uint64_t, Complex>> sorted(map_.begin(), map_.end());
  auto rank = [&](std::uint64_t key) {
    return std::make_pair(key_degree(key, ctx_.n1), key_harmonic(key, ctx_.n1, n));
  };
  std::sort(sorted.begin(), sorted.end(), [&](const auto& a, const auto& b) {
    const auto ra = rank(a.first);
    const auto rb = rank(b.first);
    return ra != rb ? ra < rb : a.first < b.first;
  });
  std::vector<Term> out;
  out.reserve(sorted.size());
  for (const auto& [key, c] : sorted) {
    Term t;
    t.j.resize(static_cast<size_t>(ctx_.n1));
    t.k.resize(static_cast<size_t>(n));
    unpack_key(key, ctx_.n1, n, t.j.data(), t.k.data());
    t.c = c;
    out.push_back(std::move(t));
  }
  return out;
}

double Series::l1_norm() const {
  const int n = ctx_.n();
  double s = 0.0;
  for (const auto& [key, c] : map_) {
    s += (key_harmonic(key, ctx_.n1, n) == 0 ? 1.0 : 2.0) * std::abs(c);
  }
  return s;
}

int Series::max_degree() const {
  int d = 0;
  for (const auto& [key, c] : map_) d = std::max(d, key_degree(key, ctx_.n1));
  return d;
}

int Series::max_harmonic() const {
  int h = 0;
  for (const auto& [key, c] : map_) h = std::max(h, key_harmonic(key, ctx_.n1, ctx_.n()));
  return h;
}

double Series::evaluate(const std::vector<double>& p, const std::vector<double>& q) const {
  const int n = ctx_.n();
  if (static_cast<int>(p.size()) < ctx_.n1 || static_cast<int>(q.size()) < n) {
    throw Error(ErrorCode::IndexOutOfRange, "evaluation point has the wrong length");
  }
  double s = 0.0;
  std::array<int, kMaxDim> j{}, k{};
  for (const auto& [key, c] : map_) {
    unpack_key(key, ctx_.n1, n, j.data(), k.data());
    double mono = 1.0;
    for (int i = 0; i < ctx_.n1; ++i) {
      for (int e = 0; e < j[static_cast<size_t>(i)]; ++e) mono *= p[static_cast<size_t>(i)];
    }
    double phase = 0.0;
    bool zero = true;
    for (int i = 0; i < n; ++i) {
      phase += k[static_cast<size_t>(i)] * q[static_cast<size_t>(i)];
      zero = zero && k[static_cast<size_t>(i)] == 0;
    }
    if (zero) {
      s += c.real() * mono;
    } else {
      s += 2.0 * mono * (c.real() * std::cos(phase) - c.imag() * std::sin(phase));
    }
  }
  return s;
}

Series Series::select(int l, int s) const {
  Series out(ctx_);
  for (const auto& [key, c] : map_) {
    if (l >= 0 && key_degree(key, ctx_.n1) != l) continue;
    if (s >= 0 && class_index(key_harmonic(key, ctx_.n1, ctx_.n()), ctx_.K) != s) continue;
    out.map_.emplace(key, c);
  }
  return out;
}

Series Series::angle_free() const {
  Series out(ctx_);
  for (const auto& [key, c] : map_) {
    if (key_harmonic(key, ctx_.n1, ctx_.n()) == 0) out.map_.emplace(key, c);
  }
  return out;
}

Series Series::angle_dependent() const {
  Series out(ctx_);
  for (const auto& [key, c] : map_) {
    if (key_harmonic(key, ctx_.n1, ctx_.n()) != 0) out.map_.emplace(key, c);
  }
  return out;
}

void Series::prune(double tol) {
  for (auto it = map_.begin(); it != map_.end();) {
    if (key_harmonic(it->first, ctx_.n1, ctx_.n()) == 0) it->second.imag(0.0);
    if (std::abs(it->second) < tol) {
      it = map_.erase(it);
    } else {
      ++it;
    }
  }
}

Series add(const Series& a, const Series& b) {
  require_same(a, b);
  Series out = a;
  for (const auto& [key, c] : b.raw()) out.add_raw(key, c);
  out.prune();
  return out;
}

Series subtract(const Series& a, const Series& b) {
  require_same(a, b);
  Series out = a;
  for (const auto& [key, c] : b.raw()) out.add_raw(key, -c);
  out.prune();
  return out;
}

Series scale(const Series& a, double factor) {
  Series out(a.context());
  for (const auto& [key, c] : a.raw()) out.add_raw(key, factor * c);
  out.prune();
  return out;
}

Series multiply(const Series& a, const Series& b) {
  require_same(a, b);
  const auto& ctx = a.context();
  const int n = ctx.n();
  Series out(ctx);
  if (a.empty() || b.empty()) return out;
  const auto A = decode_full(a);
  const auto B = decode_full(b);
  std::array<int, kMaxDim> j{}, k{};
  for (const auto& x : A) {
    int dx = 0;
    for (int i = 0; i < ctx.n1; ++i) dx += x.j[static_cast<size_t>(i)];
    for (const auto& y : B) {
      int deg = dx;
      for (int i = 0; i < ctx.n1; ++i) {
        j[static_cast<size_t>(i)] = x.j[static_cast<size_t>(i)] + y.j[static_cast<size_t>(i)];
        deg += y.j[static_cast<size_t>(i)];
      }
      if (deg > ctx.trunc_action) continue;
      int h = 0;
      for (int i = 0; i < n; ++i) {
        k[static_cast<size_t>(i)] = x.k[static_cast<size_t>(i)] + y.k[static_cast<size_t>(i)];
        h += std::abs(k[static_cast<size_t>(i)]);
      }
      if (h > ctx.trunc_fourier || !canonical(k.data(), n)) continue;
      out.add_raw(pack_key(j.data(), ctx.n1, k.data(), n), x.c * y.c);
    }
  }
  out.prune();
  return out;
}

Series partial_q(const Series& a, int i) {
  const auto& ctx = a.context();
  if (i < 0 || i >= ctx.n()) throw Error(ErrorCode::IndexOutOfRange, "angle index out of range");
  Series out(ctx);
  std::array<int, kMaxDim> j{}, k{};
  for (const auto& [key, c] : a.raw()) {
    unpack_key(key, ctx.n1, ctx.n(), j.data(), k.data());
    if (k[static_cast<size_t>(i)] == 0) continue;
    out.add_raw(key, c * Complex(0.0, k[static_cast<size_t>(i)]));
  }
  out.prune();
  return out;
}

Series partial_p(const Series& a, int i) {
  const auto& ctx = a.context();
  if (i < 0 || i >= ctx.n()) throw Error(ErrorCode::IndexOutOfRange, "action index out of range");
  Series out(ctx);
  if (i >= ctx.n1) return out;
  std::array<int, kMaxDim> j{}, k{};
  for (const auto& [key, c] : a.raw()) {
    unpack_key(key, ctx.n1, ctx.n(), j.data(), k.data());
    const int e = j[static_cast<size_t>(i)];
    if (e == 0) continue;
    j[static_cast<size_t>(i)] = e - 1;
    out.add_raw(pack_key(j.data(), ctx.n1, k.data(), ctx.n()), c * static_cast<double>(e));
  }
  out.prune();
  return out;
}

Series poisson_bracket(const Series& g, const Series& chi) {
  require_same(g, chi);
  const auto& ctx = g.context();
  Series out(ctx);
  for (int i = 0; i < ctx.n1; ++i) {
    const Series dchi_p = partial_p(chi, i);
    if (!dchi_p.empty()) {
      const Series t = multiply(partial_q(g, i), dchi_p);
      for (const auto& [key, c] : t.raw()) out.add_raw(key, c);
    }
    const Series dg_p = partial_p(g, i);
    if (!dg_p.empty()) {
      const Series t = multiply(dg_p, partial_q(chi, i));
      for (const auto& [key, c] : t.raw()) out.add_raw(key, -c);
    }
  }
  out.prune();
  return out;
}

Series bracket_with_action_form(const Series& g, const std::vector<double>& a) {
  const auto& ctx = g.context();
  if (static_cast<int>(a.size()) != ctx.n()) {
    throw Error(ErrorCode::IndexOutOfRange, "action form needs n coefficients");
  }
  Series out(ctx);
  std::array<int, kMaxDim> j{}, k{};
  for (const auto& [key, c] : g.raw()) {
    unpack_key(key, ctx.n1, ctx.n(), j.data(), k.data());
    double kw = 0.0;
    for (int i = 0; i < ctx.n(); ++i) kw += k[static_cast<size_t>(i)] * a[static_cast<size_t>(i)];
    if (kw != 0.0) out.add_raw(key, c * Complex(0.0, kw));
  }
  out.prune();
  return out;
}

Series bracket_with_angle_form(const Series& g, const std::vector<double>& xi) {
  const auto& ctx = g.context();
  if (static_cast<int>(xi.size()) != ctx.n1) {
    throw Error(ErrorCode::IndexOutOfRange, "angle form needs n1 coefficients");
  }
  Series out(ctx);
  for (int i = 0; i < ctx.n1; ++i) {
    if (xi[static_cast<size_t>(i)] == 0.0) continue;
    const Series d = partial_p(g, i);
    for (const auto& [key, c] : d.raw()) out.add_raw(key, -xi[static_cast<size_t>(i)] * c);
  }
  out.prune();
  return out;
}

Generator negate(const Generator& g) {
  Generator out{scale(g.chi, -1.0), g.xi};
  for (double& v : out.xi) v = -v;
  return out;
}

bool is_admissible(const Generator& g) {
  if (!g.xi.empty() && static_cast<int>(g.xi.size()) != g.chi.context().n1) return false;
  return g.chi.max_degree() <= 1;
}

Series lie_derivative(const Series& g, const Generator& gen) {
  Series out = poisson_bracket(g, gen.chi);
  if (!gen.xi.empty()) out = add(out, bracket_with_angle_form(g, gen.xi));
  return out;
}

Series lie_series_apply(const Series& g, const Generator& gen, int order_cap,
                        double rel_tol) {
  require_same(g, gen.chi);
  if (!is_admissible(gen)) {
    throw Error(ErrorCode::NonAdmissibleGenerator,
                "generator must be angle-only or linear in the actions");
  }
  Series result = g;
  Series term = g;
  for (int j = 1; j <= order_cap; ++j) {
    term = scale(lie_derivative(term, gen), 1.0 / j);
    if (term.empty()) break;
    for (const auto& [key, c] : term.raw()) result.add_raw(key, c);
    if (rel_tol > 0.0 && term.l1_norm() <= rel_tol * result.l1_norm()) break;
  }
  result.prune();
  return result;
}

Family classify(const Series& a) {
  const auto& ctx = a.context();
  Family out;
  for (const auto& [key, c] : a.raw()) {
    const int l = key_degree(key, ctx.n1);
    const int s = class_index(key_harmonic(key, ctx.n1, ctx.n()), ctx.K);
    auto it = out.find({l, s});
    if (it == out.end()) it = out.emplace(std::make_pair(l, s), Series(ctx)).first;
    it->second.add_raw(key, c);
  }
  return out;
}

Series flatten(const Family& family, const SeriesContext& ctx) {
  Series out(ctx);
  for (const auto& [idx, s] : family) {
    if (!(s.context() == ctx)) {
      throw Error(ErrorCode::ContextMismatch, "family member has a different context");
    }
    for (const auto& [key, c] : s.raw()) out.add_raw(key, c);
  }
  out.prune();
  return out;
}

Family reorder(const Family& family) {
  if (family.empty()) return {};
  return classify(flatten(family, family.begin()->second.context()));
}

std::string to_text(const Series& a) {
  const auto& ctx = a.context();
  std::string out;
  char buf[96];
  std::snprintf(buf, sizeof buf, "kamtools-series 1 %d %d %d %d %d %zu\n", ctx.n1, ctx.n2,
                ctx.K, ctx.trunc_fourier, ctx.trunc_action, a.size());
  out += buf;
  for (const auto& t : a.terms()) {
    for (int v : t.j) out += std::to_string(v) + ' ';
    out += ' ';
    for (int v : t.k) out += std::to_string(v) + ' ';
    std::snprintf(buf, sizeof buf, " %.17g %.17g\n", t.c.real(), t.c.imag());
    out += buf;
  }
  return out;
}

Series from_text(const std::string& text) {
  std::istringstream in(text);
  std::string magic;
  int version = 0;
  SeriesContext ctx;
  size_t count = 0;
  if (!(in >> magic >> version >> ctx.n1 >> ctx.n2 >> ctx.K >> ctx.trunc_fourier >>
        ctx.trunc_action >> count) ||
      magic != "kamtools-series" || version != 1) {
    throw Error(ErrorCode::InvalidArgument, "bad series header");
  }
  Series out(ctx);
  std::vector<int> j(static_cast<size_t>(ctx.n1)), k(static_cast<size_t>(ctx.n()));
  for (size_t t = 0; t < count; ++t) {
    for (int& v : j) in >> v;
    for (int& v : k) in >> v;
    std::string re, im;
    in >> re >> im;
    if (!in) throw Error(ErrorCode::InvalidArgument, "truncated series body");
    out.add(j, k, Complex(std::strtod(re.c_str(), nullptr), std::strtod(im.c_str(), nullptr)));
  }
  return out;
}

}  // namespace kamtools::algebra
