// Runs the twelve acceptance criteria and prints one PASS/FAIL line per criterion.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "bogolab/cli.hpp"
#include "bogolab/constants_lab.hpp"
#include "support/oracles.hpp"

using namespace bogolab;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

FieldSpec<2> pick(const std::vector<FieldSpec<2>>& set, const std::string& name) {
  for (const auto& f : set)
    if (f.name == name) return f;
  throw Error("no candidate named " + name);
}

// 1. Right inverse: relative divergence residual <= 5e-3, not growing (10% slack) under refinement.
Verdict right_inverse() {
  BogovskiiOptions fine;
  fine.angular_points = 32;
  fine.tau_points = 56;
  fine.radial_points = 28;
  Verdict v{true, ""};
  double worst = 0.0;
  auto run = [&](const StarDomain<2>& d) {
    const auto q = d.quadrature(8), q2 = d.quadrature(12);
    const auto set = candidate_set<2>("default", d, q);
    const auto set2 = candidate_set<2>("default", d, q2);
    const auto B = make_bogovskii(d), B2 = make_bogovskii(d, fine);
    for (const std::string name : {"x1", "x1*x2", "sin(pi*x1/(2a))*x2"}) {
      const double r = B.residual_and_norms(pick(set, name), q, 1, 0).div_residual_rel;
      const double r2 = B2.residual_and_norms(pick(set2, name), q2, 1, 0).div_residual_rel;
      worst = std::max(worst, r);
      const bool ok = r <= 5e-3 && r2 <= 1.1 * r;
      v.pass &= ok;
      if (!ok) v.detail += " " + describe(d) + ":" + name + " " + num(r) + "->" + num(r2);
    }
  };
  run(StarDomain<2>::rectangle(1.0, 0.5));
  run(StarDomain<2>::ball(1.0));
  v.detail = "max residual " + num(worst) + v.detail;
  return v;
}

// 2. Boundary decay of u and grad u for f in H^1_0.
Verdict boundary_decay() {
  Verdict v{true, ""};
  double worst_u = 0.0, worst_g = 0.0;
  for (const auto& d : {StarDomain<2>::rectangle(1.0, 0.5), StarDomain<2>::ball(1.0)}) {
    const auto q = d.quadrature(8);
    const auto B = make_bogovskii(d);
    for (const auto& f : candidate_set<2>("bubble", d, q)) {
      const auto r = B.residual_and_norms(f, q, 1, 128);
      const double ru = r.boundary_max_u / r.interior_max_u, rg = r.boundary_max_gradu / r.interior_max_gradu;
      worst_u = std::max(worst_u, ru);
      worst_g = std::max(worst_g, rg);
      if (ru > 1e-2 || rg > 1e-2) {
        v.pass = false;
        v.detail += " " + describe(d) + ":" + f.name;
      }
    }
  }
  v.detail = "max boundary/interior: |u| " + num(worst_u) + ", |grad u| " + num(worst_g) + v.detail;
  return v;
}

// 3. Exact norms on the thin rectangle.
Verdict exact_norms() {
  double worst = 0.0;
  for (const auto [a, e] : {std::pair{1.0, 0.25}, std::pair{2.0, 0.125}}) {
    const auto q = StarDomain<2>::rectangle(a, e).quadrature(8);
    double n1 = 0, n2 = 0, n3 = 0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      n1 += q.weights[i] * q.nodes[i][0] * q.nodes[i][0];
      n2 += q.weights[i] * std::pow(q.nodes[i][1], 4);
      n3 += q.weights[i];
    }
    worst = std::max({worst, std::abs(n1 / (4.0 / 3.0 * a * a * a * e) - 1.0),
                      std::abs(n2 / (0.8 * a * std::pow(e, 5)) - 1.0), std::abs(n3 / (4.0 * a * e) - 1.0)});
  }
  return {worst <= 1e-10, "max relative error " + num(worst)};
}

// 4. The three chain integrals agree pairwise within 5%.
Verdict chain() {
  const auto c = counterexample_chain(1.0, 0.125, 8);
  auto rel = [](double x, double y) { return std::abs(x - y) / std::max(std::abs(x), std::abs(y)); };
  const double worst = std::max({rel(c.t1, c.t2), rel(c.t1, c.t3), rel(c.t2, c.t3)});
  return {worst <= 0.05, "T1 " + num(c.t1, 6) + ", T2 " + num(c.t2, 6) + ", T3 " + num(c.t3, 6) +
                             " (max pairwise " + num(worst, 3) + "); face term " + num(c.face, 4) +
                             ", T3+face " + num(c.t3 + c.face, 6)};
}

// 5. Scaling laws over rectangles(1, eps).
Verdict scaling() {
  ScanOptions o;
  o.slope_a = {{1.4, 2.6}};
  o.slope_ba0 = {{0.8, kInf}};
  o.slope_b = {{0.5, 1.5}};
  std::vector<StarDomain<2>> fam;
  for (double e : {0.5, 0.25, 0.125, 0.0625}) fam.push_back(StarDomain<2>::rectangle(1.0, e));
  const auto rep = ba_scan(1, fam, o);
  const std::string all = rep.domain;
  auto slope = [&](const std::string& n) {
    const auto* r = rep.find("slope(" + n + " vs 1/rho)", all);
    return r ? num(r->value, 3) + "+-" + num(r->error, 2) : std::string("n/a");
  };
  return {rep.all_pass() && rep.failures() == 0 && rep.find("slope(C_BA1_A vs 1/rho) window", all),
          "slopes vs 1/eps: C^A " + slope("C_BA1_A") + ", C_BA0 " + slope("C_BA0") + ", C^B " + slope("C_BA1_B")};
}

// 6. Fourier-side bounds, 192 cases.
Verdict fourier() {
  const auto suite = fourier_suite<2>(7);
  double worst = kInf;
  int ok = 0;
  for (const auto& c : suite) {
    ok += c.ok();
    for (const auto& r : c.rows) worst = std::min(worst, r.margin);
  }
  return {suite.size() == 192 && ok == 192 && worst >= -1e-5,
          std::to_string(ok) + "/" + std::to_string(suite.size()) + " cases, min margin " + num(worst)};
}

// 7. curl-grad identity exact on 100 seeded fields; FD cross-check.
Verdict curl_identity() {
  std::mt19937_64 rng(7);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) worst = std::max(worst, curl_grad_identity(random_vector_field(3, 1 + t % 5, rng)));
  auto u = [](const Vec<3>& x) { return Vec<3>{std::sin(x[1]), std::cos(x[2]), x[0] * x[1]}; };
  std::uniform_real_distribution<double> pick(-1.5, 1.5);
  double fd = 0.0;
  for (int k = 0; k < 10; ++k) fd = std::max(fd, curl_grad_identity_fd(u, {pick(rng), pick(rng), pick(rng)}));
  return {worst == 0.0 && fd <= 1e-6, "max coefficient " + num(worst) + ", FD max " + num(fd)};
}

struct UnitSquare {
  StarDomain<2> d = StarDomain<2>::rectangle(0.5, 0.5);
  MeasuredConstants m;
  bool ready = false;
  const MeasuredConstants& get() {
    if (!ready) m = measure_constants(d, 1.0 / 64, ScanOptions{});
    ready = true;
    return m;
  }
} unit;

// 8. C_BA0 beta0 >= 0.9, C_NL0 beta0 in [0.85, 1.15] at h = 1/64.
Verdict infsup_consistency() {
  const auto& m = unit.get();
  const double a = m.c_ba0 * m.beta0, b = m.c_nl0 * m.beta0;
  return {a >= 0.9 && b >= 0.85 && b <= 1.15,
          "C_BA0*beta0 " + num(a) + ", C_NL0*beta0 " + num(b) + " (beta0 " + num(m.beta0) + ")"};
}

// 9. First-order chain on 20 H^1_0 polynomials.
Verdict negative_norm_chain() {
  RelationsOptions o;
  o.seed = 9;
  const auto& m = unit.get();
  const auto rep = relations_check(unit.d, 1.0 / 64, o, &m);
  int bad = 0, n = 0;
  double worst = 0.0;
  for (const auto& r : rep.rows)
    if (r.kind == "check" && r.name[0] == 'f') {
      ++n;
      bad += r.pass == 0;
      worst = std::max(worst, r.value);
    }
  return {n == 20 && bad == 0, std::to_string(bad) + "/" + std::to_string(n) + " violations, max ratio " + num(worst)};
}

// 10. Symmetric-gradient Necas-Lions: bound and stability across h.
Verdict symmetric_necas_lions() {
  const auto& m = unit.get();
  const auto rep = nl_symmetric_check(unit.d, 20, 15, NlSymmetricOptions{}, &m);
  int bad = 0;
  for (const auto& r : rep.rows)
    if (r.kind == "check" && r.name[0] == 'v') bad += r.pass == 0;
  const auto* spread = rep.find("C*_NL0 relative spread across resolutions");
  return {rep.all_pass(), std::to_string(bad) + "/20 violations, C*_NL0 " +
                              num(rep.value("C*_NL0", rep.domain)) + ", spread " + num(spread ? spread->value : -1)};
}

// 11. Oracle equivalences.
Verdict oracles() {
  const Mollifier<2> m({0, 0}, 0.2);
  const Vec<2> x{0.05, 0.0}, y{-0.4, 0.0};
  const Vec<2> g = kernel_eval(KernelSpec<2>{m, MultiIndex::zero()}, x, y);
  const Vec<2> t = oracle::kernel_trapezoid(m, x, y, 1000000);
  const double ek = std::max(std::abs(g[0] - t[0]), std::abs(g[1] - t[1]));

  const auto d = StarDomain<2>::rectangle(1.0, 0.5);
  const auto B = make_bogovskii(d);
  auto f = coordinate_field<2>(0);
  f.zero_mean = true;
  const Vec<2> p{0.3, 0.1};
  const Vec<2> u = B.apply(f, p), o = oracle::cartesian_oracle(B.mollifier(), 1.0, 0.5, f, p, 800, 400);
  const double ea = std::max(std::abs(u[0] - o[0]), std::abs(u[1] - o[1]));

  const auto sq = StarDomain<2>::rectangle(0.5, 0.5);
  auto err = [&](const std::string& problem, double h) {
    const auto rep = solve_report(sq, h, problem, kInf).first;
    return rep.value(problem + " max error vs manufactured solution");
  };
  const double p32 = err("poisson", 1.0 / 32), p64 = err("poisson", 1.0 / 64);
  const double b32 = err("biharmonic", 1.0 / 32), b64 = err("biharmonic", 1.0 / 64);
  const double op = std::log2(p32 / p64), ob = std::log2(b32 / b64);
  const bool pass = ek <= 1e-7 && ea <= 1e-4 && p64 <= 1e-3 && b64 <= 5e-3 && op >= 1.8 && ob >= 1.8;
  return {pass, "kernel " + num(ek, 2) + ", apply " + num(ea, 2) + ", poisson " + num(p64, 3) + " (order " +
                    num(op, 3) + "), biharmonic " + num(b64, 3) + " (order " + num(ob, 3) + ")"};
}

// 12. Every experiment twice (1 vs 3 workers): byte-identical CSV and JSON.
Verdict determinism() {
  const std::vector<std::vector<std::pair<std::string, std::string>>> configs{
      {{"run.experiment", "solve"}, {"domain.kind", "rectangle"}, {"domain.a", "0.5"}, {"domain.eps", "0.5"},
       {"grid.h", "1/16"}, {"solve.problem", "biharmonic"}},
      {{"run.experiment", "ba-scan"}, {"domain.kind", "rectangle"}, {"domain.a", "1"},
       {"domain.eps", "0.5 0.25 0.125 0.0625"}, {"scan.candidates", "basic"}, {"scan.resolution", "4"}},
      {{"run.experiment", "counterexample"}, {"domain.a", "1"}, {"domain.eps", "0.25"}, {"scan.resolution", "4"},
       {"scan.candidates", "basic"}},
      {{"run.experiment", "relations"}, {"domain.kind", "rectangle"}, {"domain.a", "0.5"}, {"domain.eps", "0.5"},
       {"grid.h", "1/16"}, {"relations.samples", "4"}, {"relations.nl_degree", "4"}, {"scan.resolution", "4"}},
      {{"run.experiment", "nl-symmetric"}, {"domain.kind", "rectangle"}, {"domain.a", "0.5"}, {"domain.eps", "0.5"},
       {"grid.hs", "1/8 1/16"}, {"relations.nl_degree", "4"}, {"scan.resolution", "4"}},
      {{"run.experiment", "fourier"}, {"fourier.directions", "2"}, {"fourier.rhos", "1"}},
      {{"run.experiment", "identities"}, {"identities.trials", "20"}},
      {{"run.experiment", "infsup"}, {"domain.kind", "rectangle"}, {"domain.a", "0.5"}, {"domain.eps", "0.25"},
       {"grid.h", "1/16"}},
      {{"run.experiment", "poincare"}, {"domain.kind", "box"}, {"domain.a", "0.5"}, {"domain.b", "0.25"},
       {"domain.c", "0.25"}, {"grid.h", "1/16"}},
  };
  const auto root = std::filesystem::temp_directory_path() / ("bogolab-determinism-" + std::to_string(::getpid()));
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
  };
  Verdict v{true, ""};
  int compared = 0;
  for (const auto& cfg : configs) {
    // Same config (including the output directory) twice; snapshot the files between runs.
    const auto dir = root / cfg[0].second;
    std::vector<std::map<std::string, std::string>> snapshots;
    for (int threads : {1, 3}) {
      RunRequest req;
      req.overrides = cfg;
      req.overrides.emplace_back("run.out", dir.string());
      req.threads = threads;
      std::ostringstream sink;
      if (run(req, sink, sink) == kExitInputError) {
        v.pass = false;
        v.detail += " " + cfg[0].second + " failed to run: " + sink.str();
      }
      std::map<std::string, std::string> files;
      if (std::filesystem::is_directory(dir))
        for (const auto& entry : std::filesystem::directory_iterator(dir))
          files[entry.path().filename().string()] = slurp(entry.path());
      std::filesystem::remove_all(dir);
      snapshots.push_back(std::move(files));
    }
    set_worker_count(0);
    compared += static_cast<int>(snapshots[0].size());
    if (snapshots[0].empty() || snapshots[0] != snapshots[1]) {
      v.pass = false;
      v.detail += " " + cfg[0].second + " outputs differ";
    }
  }
  std::filesystem::remove_all(root);
  v.detail = std::to_string(configs.size()) + " experiments, " + std::to_string(compared) + " files compared" + v.detail;
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"right-inverse property", right_inverse},
      {"boundary decay", boundary_decay},
      {"exact norms on the thin rectangle", exact_norms},
      {"counterexample chain", chain},
      {"scaling laws", scaling},
      {"Fourier bounds", fourier},
      {"curl/symmetric-gradient identity", curl_identity},
      {"inf-sup consistency", infsup_consistency},
      {"first-order negative-norm chain", negative_norm_chain},
      {"symmetric-gradient Necas-Lions", symmetric_necas_lions},
      {"oracle equivalences", oracles},
      {"determinism", determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  criterion " << (id < 10 ? " " : "") << id << "  "
              << criteria[i].first << ": " << v.detail << "  [" << num(secs, 3) << " s]" << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criterion(s) failed" : std::string("all criteria passed"))
            << std::endl;
  return failed ? 1 : 0;
}
