// config.hpp
// Run and sweep configuration: a flat `key = value` text format grouped by
// bracketed sections, with environment overrides CHTUMOR_<SECTION>_<KEY>.

#pragma once

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "chtumor/dynamics.hpp"
#include "chtumor/errors.hpp"
#include "chtumor/grid.hpp"
#include "chtumor/io.hpp"
#include "chtumor/model.hpp"

namespace chtumor {

inline constexpr std::string_view kEnvPrefix = "CHTUMOR_";

struct PotentialSpec {
  PotentialKind kind = PotentialKind::quartic;
  double lambda = 1.0;             // polynomial kind only
  std::vector<double> beta{0.0, 1.0};  // odd-power coefficients, polynomial kind only

  Potential build() const {
    switch (kind) {
      case PotentialKind::quartic: return make_quartic_potential();
      case PotentialKind::piecewise_demo: return make_demo_potential();
      case PotentialKind::custom: return make_polynomial_potential(beta, lambda);
    }
    throw ConfigError("potential: unknown kind");
  }
  bool operator==(const PotentialSpec&) const = default;
};

struct RunConfig {
  Params params;
  PotentialSpec potential;
  double h_star = 0.5;
  double phi_star = -2.0;
  std::vector<int> cells{64};
  std::vector<double> lengths{1.0};
  SchemeConfig scheme;
  double t_end = 1.0;
  InitialKind initial = ConstantInitial{};
  std::string out_dir = "out";
  std::optional<double> radius;
  std::size_t snapshot_stride = 0;  // 0: no snapshots

  GridSpec grid() const { return GridSpec::make(cells, lengths); }
  Proliferation proliferation() const { return make_proliferation(h_star, phi_star); }

  /// Checks every precondition the run and ode commands rely on.
  void validate() const {
    params.validate();
    const Potential pot = potential.build();
    const Proliferation h = proliferation();
    const GridSpec g = grid();
    validate_scheme(scheme, params, h);
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw ConfigError("scheme: t_end must be >= 0");
    if (radius && !(*radius > 0.0)) throw ConfigError("output: radius must be positive");
    (void)make_initial(g, initial, pot);
  }

  bool operator==(const RunConfig&) const = default;
};

enum class SweepAction { classify_only, ode_trajectory, pde_run };

inline std::string to_string(SweepAction a) {
  switch (a) {
    case SweepAction::classify_only: return "classify_only";
    case SweepAction::ode_trajectory: return "ode_trajectory";
    case SweepAction::pde_run: return "pde_run";
  }
  return "?";
}

struct SweepAxis {
  std::string name;
  double min = 0.0;
  double max = 1.0;
  std::size_t count = 2;

  double value(std::size_t i) const {
    return count == 1 ? min : min + (max - min) * static_cast<double>(i) / (count - 1);
  }
  bool operator==(const SweepAxis&) const = default;
};

struct SweepConfig {
  RunConfig base;
  std::vector<SweepAxis> axes;
  SweepAction action = SweepAction::classify_only;
  bool operator==(const SweepConfig&) const = default;
};

inline const std::vector<std::string>& sweepable_parameters() {
  static const std::vector<std::string> names{"P", "A", "B", "C", "sigma_s", "h_star", "phi_star"};
  return names;
}

inline void set_parameter(RunConfig& cfg, const std::string& name, double v) {
  if (name == "P") cfg.params.P = v;
  else if (name == "A") cfg.params.A = v;
  else if (name == "B") cfg.params.B = v;
  else if (name == "C") cfg.params.C = v;
  else if (name == "sigma_s") cfg.params.sigma_s = v;
  else if (name == "h_star") cfg.h_star = v;
  else if (name == "phi_star") cfg.phi_star = v;
  else throw ConfigError("sweep: unknown parameter '" + name + "'");
}

// ---------------------------------------------------------------------------
// Text document

namespace detail {

struct Entry {
  std::string value;
  int line = 0;  // 0: environment
};

using Document = std::map<std::string, std::map<std::string, Entry>>;

inline const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"params", {"P", "A", "B", "C", "sigma_s"}},
      {"potential", {"kind", "lambda", "beta"}},
      {"h", {"h_star", "phi_star"}},
      {"grid", {"cells", "lengths"}},
      {"scheme",
       {"dt", "stabilization", "linear_tol", "t_end", "max_steps", "monitor_stride", "solver",
        "envelope_tol", "divergence_threshold"}},
      {"initial",
       {"kind", "phi0", "sigma0", "width", "axis", "position", "phi_mean", "phi_amplitude",
        "sigma_mean", "sigma_amplitude", "seed"}},
      {"output", {"dir", "radius", "snapshot_stride"}},
      {"sweep", {"axis1", "axis2", "action"}},
  };
  return keys;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline Document parse_document(std::istream& in, bool apply_env) {
  Document doc;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string t = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (t.empty()) continue;
    auto where = [&] { return "line " + std::to_string(lineno) + ": "; };
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError(where() + "malformed section header");
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      if (!known_keys().contains(section))
        throw ConfigError(where() + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(where() + "expected key = value");
    if (section.empty()) throw ConfigError(where() + "key outside of any section");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (!known_keys().at(section).contains(key))
      throw ConfigError(where() + "unknown key '" + key + "' in [" + section + "]");
    if (doc[section].contains(key))
      throw ConfigError(where() + "duplicate key '" + key + "' in [" + section + "]");
    doc[section][key] = {value, lineno};
  }
  if (apply_env) {
    for (const auto& [sec, keys] : known_keys())
      for (const auto& key : keys) {
        const std::string name = std::string(kEnvPrefix) + upper(sec) + "_" + upper(key);
        if (const char* v = std::getenv(name.c_str())) doc[sec][key] = {trim(v), 0};
      }
  }
  return doc;
}

class Reader {
 public:
  explicit Reader(const Document& doc) : doc_(doc) {}

  const Entry* find(const std::string& sec, const std::string& key) const {
    auto s = doc_.find(sec);
    if (s == doc_.end()) return nullptr;
    auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }
  bool has(const std::string& sec, const std::string& key) const { return find(sec, key); }

  [[noreturn]] void fail(const std::string& sec, const std::string& key,
                         const std::string& what) const {
    const Entry* e = find(sec, key);
    std::string where = e && e->line > 0 ? "line " + std::to_string(e->line) + ": "
                                         : (e ? "environment: " : "");
    throw ConfigError(where + "[" + sec + "] " + key + ": " + what);
  }

  void number(const std::string& sec, const std::string& key, double& out) const {
    if (const Entry* e = find(sec, key))
      if (!parse_double(e->value, out)) fail(sec, key, "expected a number, got '" + e->value + "'");
  }
  template <class Int>
  void integer(const std::string& sec, const std::string& key, Int& out) const {
    if (const Entry* e = find(sec, key))
      if (!parse_int(e->value, out)) fail(sec, key, "expected an integer, got '" + e->value + "'");
  }
  void text(const std::string& sec, const std::string& key, std::string& out) const {
    if (const Entry* e = find(sec, key)) out = e->value;
  }
  template <class T, class Parse>
  void list(const std::string& sec, const std::string& key, std::vector<T>& out,
            Parse&& parse) const {
    if (const Entry* e = find(sec, key)) {
      std::vector<T> v;
      for (const auto& item : split_list(e->value)) {
        T x{};
        if (!parse(item, x)) fail(sec, key, "bad list item '" + item + "'");
        v.push_back(x);
      }
      out = std::move(v);
    }
  }

 private:
  const Document& doc_;
};

inline std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

}  // namespace detail

inline RunConfig run_config_from(const detail::Document& doc) {
  detail::Reader r(doc);
  RunConfig c;
  r.number("params", "P", c.params.P);
  r.number("params", "A", c.params.A);
  r.number("params", "B", c.params.B);
  r.number("params", "C", c.params.C);
  r.number("params", "sigma_s", c.params.sigma_s);

  std::string kind = "quartic";
  r.text("potential", "kind", kind);
  if (kind == "quartic") c.potential.kind = PotentialKind::quartic;
  else if (kind == "demo") c.potential.kind = PotentialKind::piecewise_demo;
  else if (kind == "polynomial") c.potential.kind = PotentialKind::custom;
  else r.fail("potential", "kind", "expected quartic, demo or polynomial");
  if (c.potential.kind != PotentialKind::custom &&
      (r.has("potential", "lambda") || r.has("potential", "beta")))
    r.fail("potential", r.has("potential", "lambda") ? "lambda" : "beta",
           "only the polynomial kind takes coefficients");
  r.number("potential", "lambda", c.potential.lambda);
  r.list("potential", "beta", c.potential.beta,
         [](const std::string& s, double& x) { return parse_double(s, x); });

  r.number("h", "h_star", c.h_star);
  r.number("h", "phi_star", c.phi_star);

  r.list("grid", "cells", c.cells, [](const std::string& s, int& x) { return parse_int(s, x); });
  r.list("grid", "lengths", c.lengths,
         [](const std::string& s, double& x) { return parse_double(s, x); });
  if (c.cells.size() != c.lengths.size())
    throw ConfigError("[grid] cells and lengths must list the same number of axes");

  r.number("scheme", "dt", c.scheme.dt);
  if (const auto* e = r.find("scheme", "stabilization")) {
    if (e->value == "auto") {
      c.scheme.stabilization.reset();
    } else {
      double s;
      if (!parse_double(e->value, s)) r.fail("scheme", "stabilization", "expected auto or a number");
      c.scheme.stabilization = s;
    }
  }
  r.number("scheme", "linear_tol", c.scheme.linear_tol);
  r.number("scheme", "t_end", c.t_end);
  r.integer("scheme", "max_steps", c.scheme.max_steps);
  r.integer("scheme", "monitor_stride", c.scheme.monitor_stride);
  if (const auto* e = r.find("scheme", "solver")) {
    if (e->value == "spectral") c.scheme.solver = LinearSolver::spectral;
    else if (e->value == "cg") c.scheme.solver = LinearSolver::cg;
    else r.fail("scheme", "solver", "expected spectral or cg");
  }
  r.number("scheme", "envelope_tol", c.scheme.envelope_tol);
  r.number("scheme", "divergence_threshold", c.scheme.divergence_threshold);

  std::string ikind = "constant";
  r.text("initial", "kind", ikind);
  auto allow_only = [&](std::set<std::string> allowed) {
    allowed.insert("kind");
    auto it = doc.find("initial");
    if (it == doc.end()) return;
    for (const auto& [key, entry] : it->second)
      if (!allowed.contains(key)) r.fail("initial", key, "not used by kind '" + ikind + "'");
  };
  if (ikind == "constant") {
    allow_only({"phi0", "sigma0"});
    ConstantInitial k;
    r.number("initial", "phi0", k.phi0);
    r.number("initial", "sigma0", k.sigma0);
    c.initial = k;
  } else if (ikind == "tanh") {
    allow_only({"width", "axis", "position", "sigma0"});
    TanhInitial k;
    r.number("initial", "width", k.width);
    r.integer("initial", "axis", k.axis);
    r.number("initial", "position", k.position);
    r.number("initial", "sigma0", k.sigma0);
    c.initial = k;
  } else if (ikind == "random") {
    allow_only({"phi_mean", "phi_amplitude", "sigma_mean", "sigma_amplitude", "seed"});
    RandomInitial k;
    r.number("initial", "phi_mean", k.phi_mean);
    r.number("initial", "phi_amplitude", k.phi_amplitude);
    r.number("initial", "sigma_mean", k.sigma_mean);
    r.number("initial", "sigma_amplitude", k.sigma_amplitude);
    r.integer("initial", "seed", k.seed);
    c.initial = k;
  } else {
    r.fail("initial", "kind", "expected constant, tanh or random");
  }

  r.text("output", "dir", c.out_dir);
  if (r.has("output", "radius")) {
    double v = 0.0;
    r.number("output", "radius", v);
    c.radius = v;
  }
  r.integer("output", "snapshot_stride", c.snapshot_stride);
  c.validate();
  return c;
}

inline SweepConfig sweep_config_from(const detail::Document& doc) {
  detail::Reader r(doc);
  SweepConfig s;
  s.base = run_config_from(doc);
  for (const char* key : {"axis1", "axis2"}) {
    const auto* e = r.find("sweep", key);
    if (!e) continue;
    auto parts = detail::split_list(e->value);
    if (parts.size() != 4) r.fail("sweep", key, "expected name, min, max, count");
    SweepAxis a;
    a.name = parts[0];
    if (std::find(sweepable_parameters().begin(), sweepable_parameters().end(), a.name) ==
        sweepable_parameters().end())
      r.fail("sweep", key, "unknown parameter '" + a.name + "'");
    if (!parse_double(parts[1], a.min) || !parse_double(parts[2], a.max) ||
        !parse_int(parts[3], a.count))
      r.fail("sweep", key, "bad range");
    if (a.count < 2) r.fail("sweep", key, "count must be at least 2");
    if (a.max < a.min) r.fail("sweep", key, "max must not be below min");
    const bool positive = a.name == "P" || a.name == "A" || a.name == "B" || a.name == "C";
    if (positive && !(a.min > 0.0)) r.fail("sweep", key, a.name + " must stay positive");
    if (a.name == "sigma_s" && !(a.min > 0.0 && a.max < 1.0))
      r.fail("sweep", key, "sigma_s must stay in (0, 1)");
    if (a.name == "h_star" && !(a.min >= 0.0)) r.fail("sweep", key, "h_star must stay >= 0");
    if (a.name == "phi_star" && !(a.max <= -1.0)) r.fail("sweep", key, "phi_star must stay <= -1");
    s.axes.push_back(a);
  }
  if (s.axes.empty()) throw ConfigError("[sweep] needs at least axis1");
  if (s.axes.size() == 2 && s.axes[0].name == s.axes[1].name)
    r.fail("sweep", "axis2", "axes must name different parameters");
  std::string action = "classify_only";
  r.text("sweep", "action", action);
  if (action == "classify_only") s.action = SweepAction::classify_only;
  else if (action == "ode_trajectory") s.action = SweepAction::ode_trajectory;
  else if (action == "pde_run") s.action = SweepAction::pde_run;
  else r.fail("sweep", "action", "expected classify_only, ode_trajectory or pde_run");
  return s;
}

inline RunConfig parse_run_config(std::istream& in, bool apply_env = true) {
  return run_config_from(detail::parse_document(in, apply_env));
}
inline RunConfig parse_run_config(const std::string& text, bool apply_env = false) {
  std::istringstream is(text);
  return parse_run_config(is, apply_env);
}
inline SweepConfig parse_sweep_config(std::istream& in, bool apply_env = true) {
  return sweep_config_from(detail::parse_document(in, apply_env));
}
inline SweepConfig parse_sweep_config(const std::string& text, bool apply_env = false) {
  std::istringstream is(text);
  return parse_sweep_config(is, apply_env);
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline std::string serialize(const RunConfig& c) {
  using detail::join;
  std::ostringstream os;
  auto num = [](double v) { return format_double(v); };
  os << "[params]\n"
     << "P = " << num(c.params.P) << "\nA = " << num(c.params.A) << "\nB = " << num(c.params.B)
     << "\nC = " << num(c.params.C) << "\nsigma_s = " << num(c.params.sigma_s) << "\n\n";
  os << "[potential]\nkind = " << to_string(c.potential.kind) << '\n';
  if (c.potential.kind == PotentialKind::custom)
    os << "lambda = " << num(c.potential.lambda) << "\nbeta = " << join(c.potential.beta) << '\n';
  os << "\n[h]\nh_star = " << num(c.h_star) << "\nphi_star = " << num(c.phi_star) << "\n\n";
  os << "[grid]\ncells = ";
  for (std::size_t i = 0; i < c.cells.size(); ++i) os << (i ? "," : "") << c.cells[i];
  os << "\nlengths = " << join(c.lengths) << "\n\n";
  os << "[scheme]\ndt = " << num(c.scheme.dt) << "\nstabilization = "
     << (c.scheme.stabilization ? num(*c.scheme.stabilization) : std::string("auto"))
     << "\nlinear_tol = " << num(c.scheme.linear_tol) << "\nt_end = " << num(c.t_end)
     << "\nmax_steps = " << c.scheme.max_steps << "\nmonitor_stride = " << c.scheme.monitor_stride
     << "\nsolver = " << (c.scheme.solver == LinearSolver::spectral ? "spectral" : "cg")
     << "\nenvelope_tol = " << num(c.scheme.envelope_tol)
     << "\ndivergence_threshold = " << num(c.scheme.divergence_threshold) << "\n\n";
  os << "[initial]\n";
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ConstantInitial>) {
          os << "kind = constant\nphi0 = " << num(k.phi0) << "\nsigma0 = " << num(k.sigma0)
             << '\n';
        } else if constexpr (std::is_same_v<K, TanhInitial>) {
          os << "kind = tanh\nwidth = " << num(k.width) << "\naxis = " << k.axis
             << "\nposition = " << num(k.position) << "\nsigma0 = " << num(k.sigma0) << '\n';
        } else {
          os << "kind = random\nphi_mean = " << num(k.phi_mean)
             << "\nphi_amplitude = " << num(k.phi_amplitude)
             << "\nsigma_mean = " << num(k.sigma_mean)
             << "\nsigma_amplitude = " << num(k.sigma_amplitude) << "\nseed = " << k.seed << '\n';
        }
      },
      c.initial);
  os << "\n[output]\ndir = " << c.out_dir << '\n';
  if (c.radius) os << "radius = " << num(*c.radius) << '\n';
  os << "snapshot_stride = " << c.snapshot_stride << '\n';
  return os.str();
}

inline std::string serialize(const SweepConfig& s) {
  std::ostringstream os;
  os << serialize(s.base) << "\n[sweep]\n";
  for (std::size_t i = 0; i < s.axes.size(); ++i) {
    const auto& a = s.axes[i];
    os << "axis" << i + 1 << " = " << a.name << ',' << format_double(a.min) << ','
       << format_double(a.max) << ',' << a.count << '\n';
  }
  os << "action = " << to_string(s.action) << '\n';
  return os.str();
}

}  // namespace chtumor
