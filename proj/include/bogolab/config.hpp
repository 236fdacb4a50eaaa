#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bogolab/core.hpp"

namespace bogolab {

/// Input error carrying a config line (0: not tied to a line).
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = 0)
      : Error(line > 0 ? "config line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> n{"solve",   "ba-scan",    "counterexample", "relations", "nl-symmetric",
                                          "fourier", "identities", "infsup",         "poincare"};
  return n;
}

enum class ValueType { text, integer, number, numbers };

struct KeySpec {
  std::string key;  // section.name
  ValueType type;
  std::string fallback;  // empty: no default
  std::string help;
};

/// Every accepted key. Order here is the order of the canonical config text.
inline const std::vector<KeySpec>& config_schema() {
  using T = ValueType;
  static const std::vector<KeySpec> s{
      {"run.experiment", T::text, "", "experiment to run"},
      {"run.seed", T::integer, "1", "seed for random candidates and fields"},
      {"run.out", T::text, "out", "output directory"},
      {"domain.kind", T::text, "", "rectangle | box | ball | polar"},
      {"domain.dim", T::integer, "", "2 or 3 (balls only; otherwise implied by the kind)"},
      {"domain.a", T::numbers, "", "rectangle/box half-width along x1"},
      {"domain.eps", T::numbers, "", "rectangle half-width along x2"},
      {"domain.b", T::numbers, "", "box half-width along x2"},
      {"domain.c", T::numbers, "", "box half-width along x3"},
      {"domain.r", T::numbers, "", "ball radius"},
      {"domain.radii", T::numbers, "", "polar profile radii"},
      {"bogovskii.angular_points", T::integer, "24", "Gauss points per angular panel"},
      {"bogovskii.angular_panels", T::integer, "4", "minimum angular panels"},
      {"bogovskii.azimuth_points", T::integer, "32", "3D azimuthal points"},
      {"bogovskii.tau_points", T::integer, "40", "Gauss points along the mollifier chord"},
      {"bogovskii.radial_points", T::integer, "20", "Gauss points along the ray"},
      {"scan.order", T::integer, "1", "0: C_BA0 only; 1: also C^A, C^B"},
      {"scan.candidates", T::text, "default", "candidate set: basic | default | bubble"},
      {"scan.resolution", T::integer, "8", "domain quadrature order"},
      {"scan.gate", T::number, "0.01", "max divergence residual of a usable candidate"},
      {"scan.slope_ba0", T::numbers, "", "expected slope window of C_BA0 vs 1/rho (lo hi)"},
      {"scan.slope_a", T::numbers, "", "expected slope window of C^A vs 1/rho (lo hi)"},
      {"scan.slope_b", T::numbers, "", "expected slope window of C^B vs 1/rho (lo hi)"},
      {"grid.h", T::number, "1/64", "grid spacing"},
      {"grid.hs", T::numbers, "1/32 1/64", "grid spacings of a refinement study"},
      {"solve.problem", T::text, "poisson", "poisson | biharmonic"},
      {"solve.tol", T::number, "0.005", "max nodal error against the manufactured solution"},
      {"relations.nl_degree", T::integer, "8", "Legendre degree of the C_NL0 Rayleigh space"},
      {"relations.samples", T::integer, "20", "random H^1_0 polynomials in the first-order chain"},
      {"relations.ba_lower", T::number, "0.9", "lower bound for C_BA0 beta0"},
      {"relations.nl_window", T::numbers, "0.85 1.15", "window for C_NL0 beta0"},
      {"relations.slack", T::number, "0.1", "relative slack of the first-order chain"},
      {"nl.samples", T::integer, "20", "random vector fields"},
      {"nl.degree", T::integer, "4", "polynomial degree of the fields"},
      {"nl.stability", T::number, "0.05", "max relative spread of C*_NL0 across grid.hs"},
      {"fourier.directions", T::integer, "32", "directions per rho"},
      {"fourier.rhos", T::numbers, "0.5 1 2", "mollifier radii"},
      {"fourier.tol", T::number, "1e-5", "accepted negative margin"},
      {"identities.trials", T::integer, "100", "random fields for the curl identity"},
  };
  return s;
}

/// Sections each experiment reads (run and domain handled separately).
inline std::vector<std::string> experiment_sections(const std::string& e) {
  if (e == "solve") return {"domain", "grid.h", "solve"};
  if (e == "ba-scan") return {"domain", "bogovskii", "scan"};
  if (e == "counterexample") return {"domain", "bogovskii", "scan"};
  if (e == "relations") return {"domain", "bogovskii", "scan", "grid.h", "relations"};
  if (e == "nl-symmetric") return {"domain", "bogovskii", "scan", "grid.hs", "relations", "nl"};
  if (e == "fourier") return {"fourier"};
  if (e == "identities") return {"identities"};
  if (e == "infsup" || e == "poincare") return {"domain", "grid.h"};
  throw ConfigError("unknown experiment '" + e + "'");
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

/// Number, "inf", or fraction p/q.
inline std::optional<double> parse_number(const std::string& raw) {
  const std::string s = trim(raw);
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  auto one = [](const std::string& t) -> std::optional<double> {
    double v = 0.0;
    const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (r.ec != std::errc() || r.ptr != t.data() + t.size() || t.empty()) return std::nullopt;
    return v;
  };
  const auto slash = s.find('/');
  if (slash == std::string::npos) return one(s);
  const auto p = one(trim(s.substr(0, slash))), q = one(trim(s.substr(slash + 1)));
  if (!p || !q || *q == 0.0) return std::nullopt;
  return *p / *q;
}

inline std::vector<std::string> split_words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> w;
  for (std::string t; in >> t;) w.push_back(t);
  return w;
}

/// Flat key-value config with sections; see docs/config.md.
class RunConfig {
 public:
  static const KeySpec* spec(const std::string& key) {
    for (const auto& k : config_schema())
      if (k.key == key) return &k;
    return nullptr;
  }

  static RunConfig parse(std::istream& in, const std::string& source = "config") {
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    boost::property_tree::ptree tree;
    try {
      std::istringstream s(text);
      boost::property_tree::ini_parser::read_ini(s, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError(source + ": " + e.message(), static_cast<int>(e.line()));
    }
    RunConfig c;
    c.index_lines(text);
    for (const auto& [section, body] : tree) {
      if (body.empty() && !body.data().empty()) throw ConfigError("key '" + section + "' outside a section", c.line_of("", section));
      for (const auto& [name, value] : body) {
        const std::string key = section + "." + name;
        const int line = c.line_of(section, name);
        if (!spec(key)) throw ConfigError("unknown key '" + key + "'", line);
        c.set(key, value.data(), line);
      }
    }
    return c;
  }

  static RunConfig load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file '" + path + "'");
    return parse(f, path);
  }

  /// Stores a raw value after validating it against the schema (flags use line 0).
  void set(const std::string& key, const std::string& raw, int line = 0) {
    const KeySpec* k = spec(key);
    if (!k) throw ConfigError("unknown key '" + key + "'", line);
    const std::string v = trim(raw);
    if (v.empty()) throw ConfigError("empty value for '" + key + "'", line);
    validate(*k, v, line);
    values_[key] = v;
    lines_[key] = line;
  }

  bool has(const std::string& key) const { return values_.count(key) || !spec_or_throw(key).fallback.empty(); }
  bool explicitly_set(const std::string& key) const { return values_.count(key) > 0; }

  std::string text(const std::string& key) const { return raw(key); }
  long long integer(const std::string& key) const { return std::stoll(raw(key)); }
  double number(const std::string& key) const { return *parse_number(raw(key)); }
  std::vector<double> numbers(const std::string& key) const {
    std::vector<double> out;
    for (const auto& w : split_words(raw(key))) out.push_back(*parse_number(w));
    return out;
  }
  int line(const std::string& key) const {
    const auto it = lines_.find(key);
    return it == lines_.end() ? 0 : it->second;
  }

  std::string experiment() const { return raw("run.experiment"); }

  /// Keys the experiment reads, with defaults filled in; the canonical text is built from these.
  std::vector<std::pair<std::string, std::string>> resolved() const {
    const std::string e = experiment();
    const auto sections = experiment_sections(e);
    auto relevant = [&](const std::string& key) {
      if (key.rfind("run.", 0) == 0) return true;
      for (const auto& s : sections)
        if (key == s || key.rfind(s + ".", 0) == 0) return true;
      return false;
    };
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& k : config_schema()) {
      if (!relevant(k.key)) continue;
      const auto it = values_.find(k.key);
      if (it != values_.end())
        out.emplace_back(k.key, it->second);
      else if (!k.fallback.empty())
        out.emplace_back(k.key, k.fallback);
    }
    return out;
  }

  /// Explicit keys the chosen experiment ignores.
  std::vector<std::string> ignored() const {
    std::set<std::string> used;
    for (const auto& [k, v] : resolved()) used.insert(k);
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
      if (!used.count(k)) out.push_back(k);
    return out;
  }

  /// "section.key = value" lines; run.out is excluded so relocating outputs keeps the hash.
  std::string canonical() const {
    std::string s;
    for (const auto& [k, v] : resolved())
      if (k != "run.out") s += k + " = " + v + "\n";
    return s;
  }

 private:
  const KeySpec& spec_or_throw(const std::string& key) const {
    const KeySpec* k = spec(key);
    if (!k) throw ConfigError("unknown key '" + key + "'");
    return *k;
  }

  std::string raw(const std::string& key) const {
    const KeySpec& k = spec_or_throw(key);
    const auto it = values_.find(key);
    if (it != values_.end()) return it->second;
    if (!k.fallback.empty()) return k.fallback;
    throw ConfigError("missing required key '" + key + "'");
  }

  static void validate(const KeySpec& k, const std::string& v, int line) {
    auto bad = [&](const std::string& what) {
      throw ConfigError("'" + k.key + "' expects " + what + ", got '" + v + "'", line);
    };
    switch (k.type) {
      case ValueType::text:
        if (split_words(v).size() != 1) bad("a single word");
        break;
      case ValueType::integer: {
        long long x = 0;
        const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
        if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad("an integer");
        break;
      }
      case ValueType::number:
        if (!parse_number(v)) bad("a number");
        break;
      case ValueType::numbers:
        for (const auto& w : split_words(v))
          if (!parse_number(w)) bad("a whitespace-separated list of numbers");
        break;
    }
  }

  // Maps (section, key) to the line where it appears; ptree drops positions.
  void index_lines(const std::string& text) {
    std::istringstream in(text);
    std::string section, l;
    for (int n = 1; std::getline(in, l); ++n) {
      const std::string t = trim(l);
      if (t.empty() || t[0] == ';' || t[0] == '#') continue;
      if (t.front() == '[' && t.back() == ']') {
        section = trim(t.substr(1, t.size() - 2));
        continue;
      }
      const auto eq = t.find('=');
      if (eq != std::string::npos) positions_[{section, trim(t.substr(0, eq))}] = n;
    }
  }
  int line_of(const std::string& section, const std::string& key) const {
    const auto it = positions_.find({section, key});
    return it == positions_.end() ? 0 : it->second;
  }

  std::map<std::string, std::string> values_;
  std::map<std::string, int> lines_;
  std::map<std::pair<std::string, std::string>, int> positions_;
};

}  // namespace bogolab
