#pragma once

#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <json.hpp>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bogolab/config.hpp"
#include "bogolab/constants_lab.hpp"

namespace bogolab {

/// SHA-1 of the content wrapped as a git blob object, lowercase hex.
inline std::string git_blob_hash(const std::string& content) {
  std::string blob = "blob " + std::to_string(content.size());
  blob.push_back('\0');
  blob += content;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), md, &len, EVP_sha1(), nullptr) != 1) throw Error("SHA-1 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

struct RunRequest {
  std::optional<std::string> config_path;
  std::vector<std::pair<std::string, std::string>> overrides;  // key, raw value; applied after the file
  std::optional<int> resolution;                               // meaning depends on the experiment
  bool dry_run = false;
  int threads = 0;  // 0: BOGOLAB_THREADS or hardware
};

inline constexpr int kExitPass = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitViolation = 2;

namespace detail {

inline std::string git_blob_hash_short(const RunConfig& c) { return git_blob_hash(c.canonical()).substr(0, 12); }

inline bool grid_experiment(const std::string& e) {
  return e == "solve" || e == "infsup" || e == "poincare" || e == "relations" || e == "nl-symmetric";
}

inline DomainKind parse_kind(const RunConfig& c) {
  const std::string k = c.text("domain.kind");
  for (DomainKind d : {DomainKind::rectangle, DomainKind::box, DomainKind::ball, DomainKind::polar})
    if (to_string(d) == k) return d;
  throw ConfigError("'domain.kind' must be rectangle, box, ball or polar, got '" + k + "'", c.line("domain.kind"));
}

inline int domain_dim(const RunConfig& c, DomainKind k) {
  const bool has_dim = c.explicitly_set("domain.dim");
  const int dim = has_dim ? static_cast<int>(c.integer("domain.dim")) : (k == DomainKind::box ? 3 : 2);
  if (dim != 2 && dim != 3) throw ConfigError("'domain.dim' must be 2 or 3", c.line("domain.dim"));
  if ((k == DomainKind::rectangle || k == DomainKind::polar) && dim != 2)
    throw ConfigError("'domain.dim' must be 2 for " + to_string(k), c.line("domain.dim"));
  if (k == DomainKind::box && dim != 3) throw ConfigError("'domain.dim' must be 3 for box", c.line("domain.dim"));
  return dim;
}

/// Parameter lists per domain; list-valued keys broadcast against each other (families).
inline std::vector<std::vector<double>> domain_params(const RunConfig& c, DomainKind k, bool family) {
  if (k == DomainKind::polar) return {c.numbers("domain.radii")};
  std::vector<std::string> keys;
  if (k == DomainKind::rectangle) keys = {"domain.a", "domain.eps"};
  if (k == DomainKind::box) keys = {"domain.a", "domain.b", "domain.c"};
  if (k == DomainKind::ball) keys = {"domain.r"};
  std::vector<std::vector<double>> lists;
  std::size_t n = 1;
  for (const auto& key : keys) {
    lists.push_back(c.numbers(key));
    const std::size_t m = lists.back().size();
    if (m == 0) throw ConfigError("'" + key + "' is empty", c.line(key));
    if (m > 1 && !family) throw ConfigError("'" + key + "' must be a single value for this experiment", c.line(key));
    if (m > 1 && n > 1 && m != n) throw ConfigError("list lengths of domain parameters disagree", c.line(key));
    n = std::max(n, m);
  }
  std::vector<std::vector<double>> out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& l : lists) out[i].push_back(l.size() == 1 ? l[0] : l[i]);
  return out;
}

inline BogovskiiOptions bogovskii_options(const RunConfig& c) {
  BogovskiiOptions o;
  o.angular_points = static_cast<int>(c.integer("bogovskii.angular_points"));
  o.angular_panels = static_cast<int>(c.integer("bogovskii.angular_panels"));
  o.azimuth_points = static_cast<int>(c.integer("bogovskii.azimuth_points"));
  o.tau_points = static_cast<int>(c.integer("bogovskii.tau_points"));
  o.radial_points = static_cast<int>(c.integer("bogovskii.radial_points"));
  if (o.angular_points < 1 || o.angular_panels < 1 || o.azimuth_points < 1 || o.tau_points < 1 || o.radial_points < 1)
    throw ConfigError("bogovskii point counts must be positive");
  return o;
}

inline std::optional<std::pair<double, double>> window(const RunConfig& c, const std::string& key) {
  if (!c.has(key)) return std::nullopt;
  const auto v = c.numbers(key);
  if (v.size() != 2 || v[0] > v[1]) throw ConfigError("'" + key + "' expects two numbers lo <= hi", c.line(key));
  return std::make_pair(v[0], v[1]);
}

inline ScanOptions scan_options(const RunConfig& c) {
  ScanOptions o;
  o.candidate_set = c.text("scan.candidates");
  o.resolution = static_cast<int>(c.integer("scan.resolution"));
  if (o.resolution < 1) throw ConfigError("'scan.resolution' must be positive", c.line("scan.resolution"));
  o.op = bogovskii_options(c);
  o.gate = c.number("scan.gate");
  o.slope_ba0 = window(c, "scan.slope_ba0");
  o.slope_a = window(c, "scan.slope_a");
  o.slope_b = window(c, "scan.slope_b");
  return o;
}

inline double positive(const RunConfig& c, const std::string& key) {
  const double v = c.number(key);
  if (!(v > 0.0) || std::isinf(v)) throw ConfigError("'" + key + "' must be positive and finite", c.line(key));
  return v;
}

inline RelationsOptions relations_options(const RunConfig& c) {
  RelationsOptions o;
  o.scan = scan_options(c);
  o.nl_degree = static_cast<int>(c.integer("relations.nl_degree"));
  o.samples = static_cast<int>(c.integer("relations.samples"));
  o.seed = static_cast<std::uint64_t>(c.integer("run.seed"));
  o.ba_lower = c.number("relations.ba_lower");
  const auto w = window(c, "relations.nl_window");
  o.nl_window = *w;
  o.chain_slack = c.number("relations.slack");
  if (o.nl_degree < 1 || o.samples < 1) throw ConfigError("relations degree and samples must be positive");
  return o;
}

struct Outcome {
  ConstantsReport report;
  std::optional<std::variant<GridField<2>, GridField<3>>> field;
};

template <int Dim>
Outcome execute_on(const RunConfig& c, const std::vector<StarDomain<Dim>>& doms) {
  const std::string e = c.experiment();
  const StarDomain<Dim>& d = doms.front();
  const auto seed = static_cast<std::uint64_t>(c.integer("run.seed"));
  if (e == "ba-scan") return {ba_scan(static_cast<int>(c.integer("scan.order")), doms, scan_options(c)), {}};
  if (e == "solve") {
    auto [rep, w] = solve_report(d, positive(c, "grid.h"), c.text("solve.problem"), c.number("solve.tol"));
    return {rep, std::variant<GridField<2>, GridField<3>>(std::move(w))};
  }
  if (e == "infsup") return {infsup_report(d, positive(c, "grid.h"), seed), {}};
  if (e == "poincare") return {poincare_report(d, positive(c, "grid.h")), {}};
  if (e == "relations") return {relations_check(d, positive(c, "grid.h"), relations_options(c)), {}};
  if (e == "nl-symmetric") {
    NlSymmetricOptions o;
    o.rel = relations_options(c);
    o.resolutions = c.numbers("grid.hs");
    for (double h : o.resolutions)
      if (!(h > 0.0) || std::isinf(h)) throw ConfigError("'grid.hs' entries must be positive", c.line("grid.hs"));
    o.degree = static_cast<int>(c.integer("nl.degree"));
    o.stability = c.number("nl.stability");
    return {nl_symmetric_check(d, static_cast<int>(c.integer("nl.samples")), seed, o), {}};
  }
  throw ConfigError("experiment '" + e + "' does not take a domain");
}

template <int Dim>
std::vector<StarDomain<Dim>> build_domains(const RunConfig& c, DomainKind k, bool family) {
  std::vector<StarDomain<Dim>> out;
  for (const auto& p : domain_params(c, k, family)) out.push_back(make_domain<Dim>(k, p));
  return out;
}

inline Outcome execute(const RunConfig& c) {
  const std::string e = c.experiment();
  const auto seed = static_cast<std::uint64_t>(c.integer("run.seed"));
  if (e == "identities") {
    const int trials = static_cast<int>(c.integer("identities.trials"));
    if (trials < 1) throw ConfigError("'identities.trials' must be positive", c.line("identities.trials"));
    return {identity_checks(seed, trials), {}};
  }
  if (e == "fourier") {
    const int dirs = static_cast<int>(c.integer("fourier.directions"));
    if (dirs < 1) throw ConfigError("'fourier.directions' must be positive", c.line("fourier.directions"));
    return {fourier_report(seed, dirs, c.numbers("fourier.rhos"), c.number("fourier.tol")), {}};
  }
  if (e == "counterexample") {
    if (c.explicitly_set("domain.kind") && c.text("domain.kind") != "rectangle")
      throw ConfigError("counterexample runs on a rectangle", c.line("domain.kind"));
    const auto a = c.numbers("domain.a"), eps = c.numbers("domain.eps");
    if (a.size() != 1 || eps.size() != 1) throw ConfigError("counterexample takes single values of a and eps");
    return {counterexample_report(a[0], eps[0], scan_options(c)), {}};
  }
  const DomainKind k = parse_kind(c);
  const bool family = e == "ba-scan";
  if (domain_dim(c, k) == 2) return execute_on<2>(c, build_domains<2>(c, k, family));
  return execute_on<3>(c, build_domains<3>(c, k, family));
}

inline nlohmann::ordered_json number_or_null(double v) {
  if (std::isnan(v) || std::isinf(v)) return nullptr;
  return v;
}

inline std::string to_json(const ConstantsReport& r, const RunConfig& c, const std::string& hash) {
  nlohmann::ordered_json j;
  j["experiment"] = r.experiment;
  j["hash"] = hash;
  auto& cfg = j["config"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : c.resolved()) cfg[k] = v;
  j["seed"] = r.seed;
  j["domain"] = r.domain;
  j["candidate_set"] = r.candidate_set;
  auto& rows = j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json x;
    x["kind"] = row.kind;
    x["name"] = row.name;
    x["domain"] = row.domain;
    x["resolution"] = row.resolution;
    x["value"] = number_or_null(row.value);
    x["error"] = number_or_null(row.error);
    x["lower"] = number_or_null(row.lower);
    x["upper"] = number_or_null(row.upper);
    x["pass"] = row.pass < 0 ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(row.pass == 1);
    x["note"] = row.note;
    rows.push_back(std::move(x));
  }
  j["warnings"] = r.warnings;
  int checks = 0;
  for (const auto& row : r.rows) checks += row.kind == "check";
  j["summary"] = {{"checks", checks}, {"failures", r.failures()}, {"pass", r.all_pass()}};
  return j.dump(2) + "\n";
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot write " + p.string());
  f << s;
  if (!f) throw Error("write failed: " + p.string());
}

}  // namespace detail

/// Resolves the config (flags win), runs the experiment, writes
/// <out>/<experiment>-<hash>.csv and .json. Returns the process exit code.
inline int run(const RunRequest& req, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    RunConfig c = req.config_path ? RunConfig::load(*req.config_path) : RunConfig{};
    for (const auto& [k, v] : req.overrides) c.set(k, v);
    const std::string e = c.experiment();
    experiment_sections(e);  // validates the name
    if (req.resolution) {
      if (*req.resolution < 1) throw ConfigError("--resolution must be positive");
      if (detail::grid_experiment(e))
        c.set("grid.h", "1/" + std::to_string(*req.resolution));
      else
        c.set("scan.resolution", std::to_string(*req.resolution));
    }
    for (const auto& k : c.ignored()) err << "note: '" << k << "' is not used by " << e << "\n";
    const std::string hash = detail::git_blob_hash_short(c);
    const std::filesystem::path dir = c.text("run.out");
    const std::string stem = e + "-" + hash;
    if (req.dry_run) {
      out << "experiment: " << e << "\nhash: " << hash << "\nresolved config:\n";
      for (const auto& [k, v] : c.resolved()) out << "  " << k << " = " << v << "\n";
      out << "outputs:\n  " << (dir / (stem + ".csv")).string() << "\n  " << (dir / (stem + ".json")).string() << "\n";
      if (e == "solve") out << "  " << (dir / (stem + ".bglf")).string() << "\n";
      return kExitPass;
    }
    if (req.threads > 0) set_worker_count(req.threads);
    auto outcome = detail::execute(c);
    ConstantsReport& r = outcome.report;
    std::filesystem::create_directories(dir);
    detail::write_text(dir / (stem + ".csv"), to_csv(r));
    detail::write_text(dir / (stem + ".json"), detail::to_json(r, c, hash));
    if (outcome.field)
      std::visit([&](const auto& g) { write_binary(g, (dir / (stem + ".bglf")).string()); }, *outcome.field);
    for (const auto& w : r.warnings) err << "warning: " << w << "\n";
    for (const auto& row : r.rows)
      if (row.kind == "check" && row.pass == 0)
        err << "FAIL " << row.name << " [" << row.domain << "] value " << format_number(row.value) << " not in ["
            << format_number(row.lower) << ", " << format_number(row.upper) << "]\n";
    const int checks = static_cast<int>(
        std::count_if(r.rows.begin(), r.rows.end(), [](const ReportRow& x) { return x.kind == "check"; }));
    out << e << " " << hash << ": " << checks << " checks, " << r.failures() << " failed\n"
        << "wrote " << (dir / (stem + ".csv")).string() << "\n";
    return r.all_pass() ? kExitPass : kExitViolation;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitInputError;
  }
}

}  // namespace bogolab
