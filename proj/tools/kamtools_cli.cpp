// kamtools: batch front-end over the C API.
//
//   kamtools <scan|threshold|invert|normalize|verify|basin> --config run.ini
//            [--out dir] [--threads n] [--seed n]
//
// Exit codes: 0 success, 1 module error, 2 configuration error, 130 interrupted.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kamtools/kamtools.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;
constexpr int kExitModule = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInterrupted = 130;

volatile int g_interrupted = 0;

extern "C" void on_sigint(int) { g_interrupted = 1; }

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModuleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(kt_status st) {
  if (st != KT_OK) {
    const std::string msg = kt_last_error();
    throw ModuleError(msg.empty() ? kt_status_name(st) : msg);
  }
}

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// One [section] of the config file. Every key read is echoed in resolved
// form; keys never read are rejected by finish().
class Section {
 public:
  Section(const boost::property_tree::ptree& root, std::string name) : name_(std::move(name)) {
    const auto child = root.get_child_optional(name_);
    if (!child) throw ConfigError("missing section [" + name_ + "]");
    for (const auto& [key, node] : *child) {
      if (!node.empty()) throw ConfigError("nested key " + qualified(key));
      raw_[key] = node.data();
    }
  }

  double real(const std::string& key, std::optional<double> def = std::nullopt) {
    const auto text = lookup(key);
    double v = 0.0;
    if (!text) {
      if (!def) throw ConfigError("missing required key " + qualified(key));
      v = *def;
    } else {
      v = parse_real(key, *text);
    }
    echo_[key] = fmt_real(v);
    return v;
  }

  std::optional<double> optional_real(const std::string& key) {
    const auto text = lookup(key);
    if (!text) return std::nullopt;
    const double v = parse_real(key, *text);
    echo_[key] = fmt_real(v);
    return v;
  }

  int integer(const std::string& key, std::optional<int> def = std::nullopt) {
    const auto text = lookup(key);
    long long v = 0;
    if (!text) {
      if (!def) throw ConfigError("missing required key " + qualified(key));
      v = *def;
    } else {
      size_t pos = 0;
      try {
        v = std::stoll(*text, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos == 0 || pos != text->size() || v < INT32_MIN || v > INT32_MAX) {
        throw ConfigError("key " + qualified(key) + ": expected an integer, got '" + *text + "'");
      }
    }
    echo_[key] = std::to_string(v);
    return static_cast<int>(v);
  }

  bool boolean(const std::string& key, bool def) {
    const auto text = lookup(key);
    bool v = def;
    if (text) {
      if (*text == "1" || *text == "true" || *text == "yes") {
        v = true;
      } else if (*text == "0" || *text == "false" || *text == "no") {
        v = false;
      } else {
        throw ConfigError("key " + qualified(key) + ": expected a boolean, got '" + *text + "'");
      }
    }
    echo_[key] = v ? "1" : "0";
    return v;
  }

  kt_system system(const std::string& key = "system") {
    const auto text = lookup(key);
    if (!text) throw ConfigError("missing required key " + qualified(key));
    kt_system v;
    if (*text == "map") {
      v = KT_SYSTEM_DISS_STD_MAP;
    } else if (*text == "pendulum") {
      v = KT_SYSTEM_FORCED_PENDULUM;
    } else {
      throw ConfigError("key " + qualified(key) + ": expected 'map' or 'pendulum', got '" +
                        *text + "'");
    }
    echo_[key] = *text;
    return v;
  }

  // A target frequency: a number, or "golden" for 2 - phi in the units of the
  // system (2*pi*(2 - phi) rad per iterate for the map).
  double frequency(const std::string& key, kt_system sys, std::optional<double> def = {}) {
    const auto text = lookup(key);
    double v = 0.0;
    if (!text) {
      if (!def) throw ConfigError("missing required key " + qualified(key));
      v = *def;
    } else if (*text == "golden") {
      const double g = 2.0 - std::numbers::phi;
      v = sys == KT_SYSTEM_DISS_STD_MAP ? 2.0 * std::numbers::pi * g : g;
    } else {
      v = parse_real(key, *text);
    }
    echo_[key] = fmt_real(v);
    return v;
  }

  std::vector<int> int_list(const std::string& key, const std::vector<int>& def) {
    const auto text = lookup(key);
    std::vector<int> v = def;
    if (text) {
      v.clear();
      std::stringstream ss(*text);
      std::string item;
      while (std::getline(ss, item, ',')) {
        size_t pos = 0;
        int x = 0;
        try {
          x = std::stoi(item, &pos);
        } catch (const std::exception&) {
          pos = 0;
        }
        while (pos < item.size() && item[pos] == ' ') ++pos;
        if (pos == 0 || pos != item.size()) {
          throw ConfigError("key " + qualified(key) + ": expected a comma-separated integer list");
        }
        v.push_back(x);
      }
    }
    std::string e;
    for (size_t i = 0; i < v.size(); ++i) e += (i ? "," : "") + std::to_string(v[i]);
    echo_[key] = e;
    return v;
  }

  void require(bool ok, const std::string& key, const std::string& what) const {
    if (!ok) throw ConfigError("key " + qualified(key) + ": " + what);
  }

  void finish() const {
    for (const auto& [key, value] : raw_) {
      if (!used_.count(key)) throw ConfigError("unknown key " + qualified(key));
    }
  }

  void set_echo(const std::string& key, const std::string& value) { echo_[key] = value; }
  const std::map<std::string, std::string>& echo() const { return echo_; }
  const std::string& name() const { return name_; }

 private:
  std::optional<std::string> lookup(const std::string& key) {
    used_.insert(key);
    auto it = raw_.find(key);
    if (it == raw_.end() || it->second.empty()) return std::nullopt;
    return it->second;
  }

  double parse_real(const std::string& key, const std::string& text) const {
    size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(text, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != text.size() || !std::isfinite(v)) {
      throw ConfigError("key " + qualified(key) + ": expected a finite number, got '" + text +
                        "'");
    }
    return v;
  }

  std::string qualified(const std::string& key) const { return name_ + "." + key; }

  std::string name_;
  std::map<std::string, std::string> raw_;
  std::set<std::string> used_;
  std::map<std::string, std::string> echo_;
};

struct Run {
  std::string command;
  fs::path out_dir;
  int threads = 1;
  unsigned long long seed = 0;
  json timings = json::object();
};

std::string csv_header(const Run& run, const Section& sec) {
  std::string h = "# kamtools-format " + std::to_string(kFormatVersion) + "\n";
  h += "# command = " + run.command + "\n";
  for (const auto& [k, v] : sec.echo()) h += "# " + sec.name() + "." + k + " = " + v + "\n";
  return h;
}

json json_envelope(const Run& run, const Section& sec) {
  json cfg = json::object();
  for (const auto& [k, v] : sec.echo()) cfg[k] = v;
  return {{"format_version", kFormatVersion}, {"command", run.command}, {"config", cfg}};
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  f.flush();
  if (!f) throw ModuleError("Io: cannot write " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

std::string take(char* s) {
  std::string out = s ? s : "";
  kt_string_free(s);
  return out;
}

template <class F>
double timed(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// How measured frequencies are reduced; written next to every frequency output.
const char* folding_rule(kt_system system) {
  return system == KT_SYSTEM_DISS_STD_MAP ? "omega1 per iterate folded into [0, pi]"
                                          : "omega1 per unit time folded into (-1/2, 1/2]";
}

int cmd_scan(Run& run, Section& sec) {
  kt_scan_config c;
  kt_scan_config_init(&c);
  c.system = sec.system();
  c.epsilon = sec.real("epsilon");
  c.eta = sec.real("eta");
  c.Omega_min = sec.real("Omega_min");
  c.Omega_max = sec.real("Omega_max");
  c.n_points = sec.integer("n_points");
  c.N = sec.integer("N", 0);
  if (const auto t = sec.optional_real("target_omega1")) {
    c.has_target = 1;
    c.target_omega1 = *t;
  }
  c.start_action = sec.real("start_action", 0.0);
  c.start_angle = sec.real("start_angle", 0.0);
  sec.finish();
  sec.require(c.eta >= 0.0 && c.eta < 1.0, "eta", "must lie in [0, 1)");
  sec.require(c.n_points >= 1, "n_points", "must be positive");
  sec.require(c.n_points == 1 || c.Omega_min < c.Omega_max, "Omega_max",
              "must exceed Omega_min");
  sec.require(c.N >= 0, "N", "must be non-negative");
  c.threads = run.threads;
  c.cancel = &g_interrupted;

  kt_scan* scan = nullptr;
  run.timings["scan_seconds"] = timed([&] { check(kt_scan_run(&c, &scan)); });
  const std::string body = take([&] {
    char* s = nullptr;
    const kt_status st = kt_scan_to_csv(scan, &s);
    kt_scan_free(scan);
    check(st);
    return s;
  }());
  std::string header = csv_header(run, sec);
  header += std::string("# folding = ") + folding_rule(c.system) + "\n";
  const bool interrupted = g_interrupted != 0;
  if (interrupted) header += "# interrupted = 1\n";
  write_file(run.out_dir / "scan.csv", header + body);
  return interrupted ? kExitInterrupted : 0;
}

int cmd_threshold(Run& run, Section& sec) {
  kt_threshold_config c;
  kt_threshold_config_init(&c);
  c.system = sec.system();
  c.omega1_star = sec.frequency("omega1_star", c.system);
  c.eta = sec.real("eta");
  c.eps_lo = sec.real("eps_lo");
  c.eps_hi = sec.real("eps_hi");
  c.target_uncertainty = sec.real("target_uncertainty", c.target_uncertainty);
  c.probe_N = sec.integer("probe_N", 0);
  c.full_N = sec.integer("full_N", 0);
  c.confirm = sec.boolean("confirm", c.confirm != 0) ? 1 : 0;
  c.window_halfwidth = sec.real("window_halfwidth", c.window_halfwidth);
  const auto lo = sec.optional_real("Omega_lo");
  const auto hi = sec.optional_real("Omega_hi");
  c.max_widen = sec.integer("max_widen", c.max_widen);
  c.max_probes = sec.integer("max_probes", c.max_probes);
  c.start_action = sec.real("start_action", 0.0);
  c.start_angle = sec.real("start_angle", 0.0);
  sec.finish();
  sec.require(lo.has_value() == hi.has_value(), lo ? "Omega_hi" : "Omega_lo",
              "Omega_lo and Omega_hi must be given together");
  if (lo) {
    sec.require(*lo < *hi, "Omega_hi", "must exceed Omega_lo");
    c.has_Omega_bracket = 1;
    c.Omega_lo = *lo;
    c.Omega_hi = *hi;
  }
  sec.require(c.eta >= 0.0 && c.eta < 1.0, "eta", "must lie in [0, 1)");
  sec.require(c.eps_lo < c.eps_hi, "eps_hi", "must exceed eps_lo");
  sec.require(c.target_uncertainty > 0.0, "target_uncertainty", "must be positive");
  sec.require(c.window_halfwidth > 0.0, "window_halfwidth", "must be positive");
  sec.require(c.probe_N >= 0, "probe_N", "must be non-negative");
  sec.require(c.full_N >= 0, "full_N", "must be non-negative");
  sec.require(c.max_probes >= 1, "max_probes", "must be positive");
  sec.require(c.max_widen >= 0, "max_widen", "must be non-negative");
  c.threads = run.threads;

  kt_threshold* t = nullptr;
  run.timings["threshold_seconds"] = timed([&] { check(kt_threshold_run(&c, &t)); });
  char* s = nullptr;
  const kt_status st = kt_threshold_to_json(t, &s);
  kt_threshold_free(t);
  check(st);
  json out = json_envelope(run, sec);
  out["folding"] = folding_rule(c.system);
  out["result"] = json::parse(take(s));
  write_json(run.out_dir / "threshold.json", out);
  return 0;
}

int cmd_invert(Run& run, Section& sec) {
  kt_newton_config c;
  kt_newton_config_init(&c);
  c.system = sec.system();
  c.omega1_star = sec.frequency("omega1_star", c.system);
  c.epsilon = sec.real("epsilon");
  c.eta = sec.real("eta");
  c.Omega0 = sec.real("Omega0");
  c.alpha = sec.real("alpha", c.alpha);
  c.beta = sec.real("beta", c.beta);
  c.max_iter = sec.integer("max_iter", c.max_iter);
  c.min_slope = sec.real("min_slope", c.min_slope);
  c.N = sec.integer("N", 0);
  sec.finish();
  sec.require(c.eta >= 0.0 && c.eta < 1.0, "eta", "must lie in [0, 1)");
  sec.require(c.alpha > 0.0, "alpha", "must be positive");
  sec.require(c.beta > 0.0, "beta", "must be positive");
  sec.require(c.max_iter >= 1, "max_iter", "must be positive");
  sec.require(c.N >= 0, "N", "must be non-negative");

  kt_newton* n = nullptr;
  run.timings["invert_seconds"] = timed([&] { check(kt_newton_run(&c, &n)); });
  char* s = nullptr;
  const kt_status st = kt_newton_to_json(n, &s);
  kt_newton_free(n);
  check(st);
  json out = json_envelope(run, sec);
  out["folding"] = folding_rule(c.system);
  out["result"] = json::parse(take(s));
  write_json(run.out_dir / "invert.json", out);
  return 0;
}

kt_normalize_config read_normalize(Section& sec) {
  kt_normalize_config c;
  kt_normalize_config_init(&c);
  c.epsilon = sec.real("epsilon");
  c.eta = sec.real("eta");
  c.omega1 = sec.frequency("omega1", KT_SYSTEM_FORCED_PENDULUM, c.omega1);
  c.Omega_star = sec.real("Omega_star");
  c.K = sec.integer("K", c.K);
  c.trunc_fourier = sec.integer("trunc_fourier", c.trunc_fourier);
  c.r_max = sec.integer("r_max", c.r_max);
  c.omega_plateau = sec.real("omega_plateau", c.omega_plateau);
  return c;
}

void validate_normalize(const Section& sec, const kt_normalize_config& c) {
  sec.require(c.eta >= 0.0, "eta", "must be non-negative");
  sec.require(c.K >= 1, "K", "must be positive");
  sec.require(c.trunc_fourier >= c.K, "trunc_fourier", "must be at least K");
  sec.require(c.r_max >= 1, "r_max", "must be positive");
}

struct Normalization {
  kt_normalization* h = nullptr;
  ~Normalization() { kt_normalization_free(h); }
};

json normalization_manifest(const Run& run, const Section& sec, Normalization& n,
                            json& timings) {
  kt_normalize_summary sum;
  check(kt_normalization_get(n.h, &sum));
  char* s = nullptr;
  check(kt_normalization_steps_json(n.h, &s));
  json out = json_envelope(run, sec);
  out["steps"] = json::parse(take(s));
  out["chi2_ratio"] = std::isfinite(sum.chi2_ratio) ? json(sum.chi2_ratio) : json(nullptr);
  out["omega_plateau_onset"] =
      sum.omega_plateau_onset < 0 ? json(nullptr) : json(sum.omega_plateau_onset);
  const char* err = kt_normalization_error(n.h);
  out["stopped_early"] = err ? json(err) : json(nullptr);
  json steps = json::array();
  for (int i = 0; i < sum.steps; ++i) {
    kt_step_record rec;
    check(kt_normalization_step(n.h, static_cast<size_t>(i), &rec));
    steps.push_back({{"r", rec.r}, {"seconds", rec.seconds}});
  }
  timings["steps"] = steps;
  return out;
}

int cmd_normalize(Run& run, Section& sec) {
  const kt_normalize_config c = read_normalize(sec);
  sec.finish();
  validate_normalize(sec, c);

  Normalization n;
  run.timings["normalize_seconds"] = timed([&] { check(kt_normalize_run(&c, &n.h)); });
  const json manifest = normalization_manifest(run, sec, n, run.timings);
  write_json(run.out_dir / "normalize.json", manifest);
  char* s = nullptr;
  check(kt_normalization_norms_csv(n.h, &s));
  write_file(run.out_dir / "normalize_norms.csv", csv_header(run, sec) + take(s));
  return manifest["stopped_early"].is_null() ? 0 : kExitModule;
}

int cmd_verify(Run& run, Section& sec) {
  const kt_normalize_config c = read_normalize(sec);
  const std::vector<int> r_list = sec.int_list("r_list", {10, 15, 20});
  const int n_points = sec.integer("n_points", 10001);
  sec.finish();
  validate_normalize(sec, c);
  sec.require(n_points >= 1, "n_points", "must be positive");
  sec.require(!r_list.empty(), "r_list", "must not be empty");
  for (int r : r_list) sec.require(r >= 0 && r <= c.r_max, "r_list", "entries must lie in [0, r_max]");

  Normalization n;
  run.timings["normalize_seconds"] = timed([&] { check(kt_normalize_run(&c, &n.h)); });
  std::vector<double> worst(r_list.size());
  run.timings["verify_seconds"] = timed([&] {
    check(kt_normalization_verify(n.h, r_list.data(), r_list.size(), n_points, run.threads,
                                  worst.data()));
  });
  std::string body = "r,max_abs_P1\n";
  for (size_t i = 0; i < r_list.size(); ++i) {
    body += std::to_string(r_list[i]) + "," + fmt_real(worst[i]) + "\n";
  }
  write_file(run.out_dir / "verify.csv", csv_header(run, sec) + body);
  return 0;
}

int cmd_basin(Run& run, Section& sec) {
  const kt_normalize_config c = read_normalize(sec);
  const int n_curve = sec.integer("n_curve", 256);
  const int n_random = sec.integer("n_random", 0);
  const int random_N = sec.integer("random_N", 0);
  const double freq_tol = sec.real("frequency_tol", 1e-8);
  const auto probe_q1 = sec.optional_real("probe_q1");
  const auto probe_p1 = sec.optional_real("probe_p1");
  sec.finish();
  validate_normalize(sec, c);
  sec.require(n_curve >= 0, "n_curve", "must be non-negative");
  sec.require(n_random >= 0, "n_random", "must be non-negative");
  sec.require(random_N >= 0, "random_N", "must be non-negative");
  sec.require(probe_q1.has_value() == probe_p1.has_value(), probe_q1 ? "probe_p1" : "probe_q1",
              "probe_q1 and probe_p1 must be given together");
  sec.set_echo("seed", std::to_string(run.seed));

  Normalization n;
  run.timings["normalize_seconds"] = timed([&] { check(kt_normalize_run(&c, &n.h)); });
  kt_basin* b = nullptr;
  run.timings["basin_seconds"] = timed([&] { check(kt_basin_run(n.h, n_curve, &b)); });
  std::unique_ptr<kt_basin, void (*)(kt_basin*)> guard(b, kt_basin_free);
  double B = 0.0, radius = 0.0;
  int unbounded = 0;
  check(kt_basin_get(b, &B, &radius, &unbounded));

  json out = json_envelope(run, sec);
  out["B"] = B;
  out["radius"] = unbounded ? json(nullptr) : json(radius);
  out["unbounded"] = unbounded != 0;
  if (probe_q1) {
    double P1 = 0.0;
    check(kt_normalization_action(n.h, -1, *probe_p1, *probe_q1, 0.0, &P1));
    out["probe"] = {{"q1", *probe_q1},
                    {"p1", *probe_p1},
                    {"P1", P1},
                    {"inside", unbounded != 0 || std::abs(P1) < radius}};
  }

  std::string curves = "i,q1_upper,p1_upper,q1_lower,p1_lower\n";
  for (size_t i = 0; i < kt_basin_curve_size(b); ++i) {
    double qu, pu, ql, pl;
    check(kt_basin_curve(b, i, &qu, &pu, &ql, &pl));
    curves += std::to_string(i) + "," + fmt_real(qu) + "," + fmt_real(pu) + "," + fmt_real(ql) +
              "," + fmt_real(pl) + "\n";
  }
  write_file(run.out_dir / "basin_curves.csv", csv_header(run, sec) + curves);

  if (n_random > 0) {
    sec.require(!unbounded, "n_random", "random sampling needs a bounded region");
    std::mt19937_64 rng(run.seed);
    std::uniform_real_distribution<double> P(-radius, radius);
    std::uniform_real_distribution<double> Q(0.0, 2.0 * std::numbers::pi);
    struct Sample {
      double P1, Q1, q1, p1, omega1;
    };
    std::vector<Sample> samples(static_cast<size_t>(n_random));
    for (auto& s : samples) {
      s.P1 = P(rng);
      s.Q1 = Q(rng);
      check(kt_basin_to_original(b, s.P1, s.Q1, &s.q1, &s.p1));
    }
    std::vector<kt_status> status(samples.size(), KT_OK);
    std::vector<std::string> errors(samples.size());
    run.timings["random_seconds"] = timed([&] {
      std::atomic<size_t> next{0};
      std::vector<std::thread> pool;
      const int workers = std::max(1, std::min(run.threads, n_random));
      for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
          for (size_t i = next++; i < samples.size(); i = next++) {
            auto& s = samples[i];
            status[i] = kt_measure_omega1(KT_SYSTEM_FORCED_PENDULUM, c.epsilon, c.eta,
                                          c.Omega_star, random_N, s.p1 - c.Omega_star, s.q1,
                                          &s.omega1);
            if (status[i] != KT_OK) errors[i] = kt_last_error();
          }
        });
      }
      for (auto& t : pool) t.join();
    });
    std::string body = "i,P1,Q1,q1,p1,omega1,deviation,converged\n";
    int converged = 0;
    double worst = 0.0;
    for (size_t i = 0; i < samples.size(); ++i) {
      if (status[i] != KT_OK) {
        throw ModuleError(errors[i]);
      }
      const auto& s = samples[i];
      const double dev = std::abs(s.omega1 - c.omega1);
      const bool ok = dev < freq_tol;
      converged += ok ? 1 : 0;
      worst = std::max(worst, dev);
      body += std::to_string(i) + "," + fmt_real(s.P1) + "," + fmt_real(s.Q1) + "," +
              fmt_real(s.q1) + "," + fmt_real(s.p1) + "," + fmt_real(s.omega1) + "," +
              fmt_real(dev) + "," + (ok ? "1" : "0") + "\n";
    }
    write_file(run.out_dir / "basin_samples.csv", csv_header(run, sec) + body);
    out["random"] = {{"count", n_random}, {"converged", converged}, {"max_deviation", worst}};
  }
  write_json(run.out_dir / "basin.json", out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frequency-map and Kolmogorov normal-form tools for dissipative systems"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::string out_dir = ".";
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  unsigned long long seed = 0;
  const std::map<std::string, std::function<int(Run&, Section&)>> commands = {
      {"scan", cmd_scan},         {"threshold", cmd_threshold}, {"invert", cmd_invert},
      {"normalize", cmd_normalize}, {"verify", cmd_verify},     {"basin", cmd_basin}};
  const std::map<std::string, std::string> help = {
      {"scan", "frequency-map scan over a grid of Omega (CSV)"},
      {"threshold", "breakdown threshold of a torus by regularity bisection (JSON)"},
      {"invert", "Newton inversion of the frequency map (JSON)"},
      {"normalize", "Kolmogorov normalization of the forced pendulum (JSON + CSV)"},
      {"verify", "max |P1| along the numerical attractor per step count (CSV)"},
      {"basin", "basin-of-attraction estimate around the torus (JSON + CSV)"}};
  for (const auto& [name, fn] : commands) {
    auto* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("--config", config_path, "INI configuration file")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--threads", threads, "worker cap")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "random seed");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  Run run;
  run.command = app.get_subcommands().front()->get_name();
  run.out_dir = out_dir;
  run.threads = threads;
  run.seed = seed;
  std::signal(SIGINT, on_sigint);

  try {
    boost::property_tree::ptree root;
    try {
      boost::property_tree::ini_parser::read_ini(config_path, root);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError(e.what());
    }
    Section sec(root, run.command);
    std::error_code ec;
    fs::create_directories(run.out_dir, ec);
    if (ec) throw ModuleError("Io: cannot create " + run.out_dir.string());
    run.timings["threads"] = run.threads;
    const int code = commands.at(run.command)(run, sec);
    write_json(run.out_dir / (run.command + ".timings.json"), run.timings);
    return code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ModuleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitModule;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitModule;
  }
}
