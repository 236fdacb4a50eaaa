#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "bogolab/core.hpp"
#include "bogolab/mollifier.hpp"
#include "bogolab/parallel.hpp"
#include "bogolab/quadrature.hpp"

namespace bogolab {

/// The two weight functions: omega itself, or x_k * omega.
enum class PhiKind { omega, coord_times_omega };

/// omega or x_k omega, with derivatives from the product rule.
template <int Dim>
class Phi {
 public:
  Phi(Mollifier<Dim> m, PhiKind kind = PhiKind::omega, int k = 0)
      : m_(std::move(m)), kind_(kind), k_(k), cache_(std::make_shared<Cache>()) {
    if (k < 0 || k >= Dim) throw Error("Phi: coordinate index out of range");
  }

  const Mollifier<Dim>& mollifier() const { return m_; }
  PhiKind kind() const { return kind_; }
  int k() const { return k_; }
  double rho() const { return m_.rho(); }
  const Vec<Dim>& center() const { return m_.center(); }

  std::string label() const {
    return kind_ == PhiKind::omega ? "omega" : "x" + std::to_string(k_ + 1) + "*omega";
  }

  double deriv(const MultiIndex& a, const Vec<Dim>& x) const {
    if (kind_ == PhiKind::omega) return m_.eval_deriv(a, x);
    double v = x[k_] * m_.eval_deriv(a, x);
    if (a.orders[k_] > 0) {
      MultiIndex b = a;
      b.orders[k_] -= 1;
      v += a.orders[k_] * m_.eval_deriv(b, x);
    }
    return v;
  }

  /// L1 norm of d^a phi, cached.
  double l1(const MultiIndex& a, const BallLattice& lat = {}) const {
    if (a.total() > kMaxMollifierOrder) throw Error("Phi::l1: derivative order above 3");
    const auto key = a.orders;
    {
      std::lock_guard<std::mutex> lock(cache_->mutex);
      if (auto it = cache_->l1.find(key); it != cache_->l1.end()) return it->second;
    }
    const double v =
        ball_norms<Dim>([&](const Vec<Dim>& x) { return deriv(a, x); }, center(), rho(), lat).l1;
    std::lock_guard<std::mutex> lock(cache_->mutex);
    cache_->l1[key] = v;
    return v;
  }

 private:
  struct Cache {
    std::mutex mutex;
    std::map<std::array<int, 3>, double> l1;
  };
  Mollifier<Dim> m_;
  PhiKind kind_;
  int k_;
  std::shared_ptr<Cache> cache_;
};

/// Fourier transform by two routes.
struct FourierValue {
  std::complex<double> direct;      // quadrature of d^a phi
  std::complex<double> multiplier;  // (2 pi i xi)^a times quadrature of phi
  double discrepancy = 0.0;
};

namespace detail {

template <int Dim, typename Fn>
std::complex<double> ft_quadrature(Fn&& g, const Vec<Dim>& c, double rho, const Vec<Dim>& xi, int nodes) {
  const Rule1D r = gauss_on(-rho, rho, nodes);
  const double tp = 2.0 * std::numbers::pi;
  std::complex<double> s = 0.0;
  if constexpr (Dim == 2) {
    for (std::size_t a = 0; a < r.size(); ++a)
      for (std::size_t b = 0; b < r.size(); ++b) {
        const Vec<2> x{c[0] + r.nodes[a], c[1] + r.nodes[b]};
        const double v = g(x);
        if (v == 0.0) continue;
        s += r.weights[a] * r.weights[b] * v * std::polar(1.0, -tp * dot<2>(x, xi));
      }
  } else {
    for (std::size_t a = 0; a < r.size(); ++a)
      for (std::size_t b = 0; b < r.size(); ++b)
        for (std::size_t e = 0; e < r.size(); ++e) {
          const Vec<3> x{c[0] + r.nodes[a], c[1] + r.nodes[b], c[2] + r.nodes[e]};
          const double v = g(x);
          if (v == 0.0) continue;
          s += r.weights[a] * r.weights[b] * r.weights[e] * v * std::polar(1.0, -tp * dot<3>(x, xi));
        }
  }
  return s;
}

}  // namespace detail

/// Default tensor Gauss order per axis. omega is flat at the support edge, so Gauss converges
/// slowly: 64 nodes leave ~1e-8 in the mass and ~1e-6 in first-derivative transforms.
template <int Dim>
inline constexpr int kFourierNodes = Dim == 2 ? 192 : 96;

/// FT of d^a phi at xi over the bounding cube of the support, nodes^n tensor Gauss.
template <int Dim>
FourierValue fourier_transform(const Phi<Dim>& phi, const MultiIndex& alpha,
                               const std::type_identity_t<Vec<Dim>>& xi, int nodes = kFourierNodes<Dim>) {
  if (alpha.total() > kMaxMollifierOrder) throw Error("fourier_transform: derivative order above 3");
  FourierValue out;
  out.direct = detail::ft_quadrature<Dim>([&](const Vec<Dim>& x) { return phi.deriv(alpha, x); },
                                          phi.center(), phi.rho(), xi, nodes);
  std::complex<double> mult = 1.0;
  for (int a = 0; a < Dim; ++a)
    for (int c = 0; c < alpha.orders[a]; ++c) mult *= std::complex<double>(0.0, 2.0 * std::numbers::pi * xi[a]);
  out.multiplier = alpha.total() == 0
                       ? out.direct
                       : mult * detail::ft_quadrature<Dim>(
                                    [&](const Vec<Dim>& x) { return phi.deriv(MultiIndex::zero(), x); },
                                    phi.center(), phi.rho(), xi, nodes);
  out.discrepancy = std::abs(out.direct - out.multiplier);
  return out;
}

template <int Dim>
FourierValue fourier_transform(const Mollifier<Dim>& m, const MultiIndex& alpha,
                               const std::type_identity_t<Vec<Dim>>& xi, int nodes = kFourierNodes<Dim>) {
  return fourier_transform(Phi<Dim>(m), alpha, xi, nodes);
}

/// Resolution of the ray integral int_0^inf |FT(d^a phi)(t xi)| dt.
struct LineOptions {
  int proj_panels = 64;       // Gauss panels across the support; must resolve cos(2 pi t q) up to max_extent
  int proj_points = 24;
  int slice_points = 48;      // per half chord (2D) / per radial panel (3D)
  int slice_angular = 64;     // 3D disc azimuth
  int steps_per_rho = 8;      // root-search grid: 1/(steps * rho) in frequency
  int piece_points = 10;      // Gauss points per grid piece
  double tail_budget = 1e-6;  // stop once 2 pi |xi| * (fitted tail) is below this
  double min_extent = 8.0;    // in units of 1/rho
  double max_extent = 240.0;
};

struct LineIntegral {
  double integral = 0.0;  // int_0^T |FT(t xi)| dt
  double tail = 0.0;      // fitted C/t^2 tail beyond T
  double cutoff = 0.0;    // T
  bool converged = true;
};

namespace detail {

/// Projection of d^a phi onto the line through the center along e, at offsets q.
template <int Dim>
std::vector<double> projection(const Phi<Dim>& phi, const MultiIndex& alpha, const Vec<Dim>& e,
                               const std::vector<double>& q, const LineOptions& o) {
  const double rho = phi.rho();
  std::vector<double> out(q.size(), 0.0);
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double w = std::sqrt(std::max(0.0, rho * rho - q[i] * q[i]));
    if (w == 0.0) continue;
    const Vec<Dim> base = phi.center() + q[i] * e;
    double s = 0.0;
    if constexpr (Dim == 2) {
      const Vec<2> perp{-e[1], e[0]};
      const Rule1D r = composite_gauss(-w, w, 2, o.slice_points);
      for (std::size_t k = 0; k < r.size(); ++k) s += r.weights[k] * phi.deriv(alpha, base + r.nodes[k] * perp);
    } else {
      Vec<3> u{};
      const int m = std::abs(e[0]) < 0.9 ? 0 : 1;
      u[m] = 1.0;
      u = u - dot<3>(u, e) * e;
      u = (1.0 / norm<3>(u)) * u;
      const Vec<3> v{e[1] * u[2] - e[2] * u[1], e[2] * u[0] - e[0] * u[2], e[0] * u[1] - e[1] * u[0]};
      const Rule1D r = composite_gauss(0.0, w, 2, o.slice_points);
      const Rule1D th = periodic_trapezoid(o.slice_angular);
      for (std::size_t k = 0; k < r.size(); ++k)
        for (std::size_t a = 0; a < th.size(); ++a) {
          const Vec<3> x = base + (r.nodes[k] * std::cos(th.nodes[a])) * u + (r.nodes[k] * std::sin(th.nodes[a])) * v;
          s += r.weights[k] * th.weights[a] * r.nodes[k] * phi.deriv(alpha, x);
        }
    }
    out[i] = s;
  }
  return out;
}

}  // namespace detail

/// int_0^inf |FT(d^a phi)(t xi)| dt via the projection-slice identity: the slice of the
/// transform along xi is the 1D transform of the projection, split into its even (cosine)
/// and odd (sine) parts; |.| is integrated piecewise between their roots.
template <int Dim>
LineIntegral ray_abs_integral(const Phi<Dim>& phi, const MultiIndex& alpha, const std::type_identity_t<Vec<Dim>>& xi,
                              const LineOptions& o = {}) {
  LineIntegral out;
  const double nx = norm<Dim>(xi);
  if (nx == 0.0) throw Error("ray_abs_integral: xi must be nonzero");
  const Vec<Dim> e = (1.0 / nx) * xi;
  const double rho = phi.rho();

  const Rule1D qr = composite_gauss(-rho, rho, 2 * ((o.proj_panels + 1) / 2), o.proj_points);
  const std::vector<double> p = detail::projection<Dim>(phi, alpha, e, qr.nodes, o);
  const std::size_t n = qr.size();
  std::vector<double> ev(n), od(n);
  double e_mag = 0.0, o_mag = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ev[i] = 0.5 * qr.weights[i] * (p[i] + p[n - 1 - i]);
    od[i] = 0.5 * qr.weights[i] * (p[i] - p[n - 1 - i]);
    e_mag += std::abs(ev[i]);
    o_mag += std::abs(od[i]);
  }
  const bool use_e = e_mag > 1e-13 * (e_mag + o_mag);
  const bool use_o = o_mag > 1e-13 * (e_mag + o_mag);

  // Components at ray parameter t (frequency t*|xi|).
  const double tp = 2.0 * std::numbers::pi * nx;
  auto parts = [&](double t) {
    double c = 0.0, s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ang = tp * t * qr.nodes[i];
      if (use_e) c += ev[i] * std::cos(ang);
      if (use_o) s += od[i] * std::sin(ang);
    }
    return std::array<double, 2>{c, s};
  };
  auto modulus = [&](double t) {
    const auto v = parts(t);
    return std::hypot(v[0], v[1]);
  };
  // Illinois regula falsi on a bracketing step.
  auto root = [&](double a, double b, double fa, double fb, int comp) {
    int side = 0;
    for (int it = 0; it < 50 && b - a > 1e-15 * std::max(1.0, b); ++it) {
      const double m = (a * fb - b * fa) / (fb - fa);
      const double fm = parts(m)[comp];
      if (fm == 0.0) return m;
      if ((fm < 0.0) == (fa < 0.0)) {
        a = m;
        fa = fm;
        if (side == -1) fb *= 0.5;
        side = -1;
      } else {
        b = m;
        fb = fm;
        if (side == 1) fa *= 0.5;
        side = 1;
      }
    }
    return 0.5 * (a + b);
  };

  const double dt = 1.0 / (o.steps_per_rho * rho * nx);
  const double t_min = o.min_extent / (rho * nx);
  const double t_max = o.max_extent / (rho * nx);
  const Rule1D& ref = gauss_legendre(o.piece_points);
  const std::size_t np = ref.size();
  auto piece = [&](double a, double b) {
    double s = 0.0;
    for (std::size_t k = 0; k < np; ++k)
      s += 0.5 * (b - a) * ref.weights[k] * modulus(0.5 * (a + b) + 0.5 * (b - a) * ref.nodes[k]);
    return s;
  };

  // Grid steps without a root reuse the phases at the step start, rotated by precomputed
  // offsets; only split steps fall back to direct evaluation.
  std::vector<double> off_c(n * np), off_s(n * np), step_c(n), step_s(n), zc(n), zs(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < np; ++k) {
      const double ang = tp * qr.nodes[i] * dt * 0.5 * (1.0 + ref.nodes[k]);
      off_c[i * np + k] = std::cos(ang);
      off_s[i * np + k] = std::sin(ang);
    }
    step_c[i] = std::cos(tp * qr.nodes[i] * dt);
    step_s[i] = std::sin(tp * qr.nodes[i] * dt);
    zc[i] = 1.0;
    zs[i] = 0.0;
  }
  auto fast_piece = [&] {
    double s = 0.0;
    for (std::size_t k = 0; k < np; ++k) {
      double c = 0.0, sn = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double oc = off_c[i * np + k], os = off_s[i * np + k];
        c += ev[i] * (zc[i] * oc - zs[i] * os);
        sn += od[i] * (zs[i] * oc + zc[i] * os);
      }
      s += 0.5 * dt * ref.weights[k] * std::hypot(use_e ? c : 0.0, use_o ? sn : 0.0);
    }
    return s;
  };

  std::vector<double> ts{0.0}, mods{modulus(0.0)};
  auto prev = parts(0.0);
  double t = 0.0;
  const double lhs_scale = 2.0 * std::numbers::pi * nx;
  std::vector<double> nc(n), ns(n);
  for (int step = 1;; ++step) {
    const double t1 = step * dt;
    // Phases at the step end; resynchronized periodically against drift.
    for (std::size_t i = 0; i < n; ++i) {
      if (step % 64 == 0) {
        nc[i] = std::cos(tp * qr.nodes[i] * t1);
        ns[i] = std::sin(tp * qr.nodes[i] * t1);
      } else {
        nc[i] = zc[i] * step_c[i] - zs[i] * step_s[i];
        ns[i] = zs[i] * step_c[i] + zc[i] * step_s[i];
      }
    }
    std::array<double, 2> cur{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      if (use_e) cur[0] += ev[i] * nc[i];
      if (use_o) cur[1] += od[i] * ns[i];
    }
    std::vector<double> br{t};
    for (int comp = 0; comp < 2; ++comp)
      if (prev[comp] != 0.0 && (cur[comp] < 0.0) != (prev[comp] < 0.0))
        br.push_back(root(t, t1, prev[comp], cur[comp], comp));
    br.push_back(t1);
    if (br.size() == 2) {
      out.integral += fast_piece();
    } else {
      std::sort(br.begin(), br.end());
      for (std::size_t k = 0; k + 1 < br.size(); ++k) out.integral += piece(br[k], br[k + 1]);
    }
    zc.swap(nc);
    zs.swap(ns);
    t = t1;
    prev = cur;
    ts.push_back(t1);
    mods.push_back(std::hypot(cur[0], cur[1]));

    // Tail fit |FT| <= C / t^2 from samples on [T/2, T], checked every rho-block.
    if (step % o.steps_per_rho == 0 && t1 >= t_min) {
      double c = 0.0;
      for (std::size_t k = ts.size(); k-- > 0 && ts[k] >= 0.5 * t1;) c = std::max(c, mods[k] * ts[k] * ts[k]);
      out.tail = c / t1;
      out.cutoff = t1;
      if (lhs_scale * out.tail <= o.tail_budget) break;
      if (t1 >= t_max) {
        out.converged = false;
        break;
      }
    }
  }
  return out;
}

/// 2 pi |xi_j| int_0^inf |FT(d^a phi)(t xi)| dt.
template <int Dim>
double lhs_line_integral(const Phi<Dim>& phi, const MultiIndex& alpha, int j,
                         const std::type_identity_t<Vec<Dim>>& xi, const LineOptions& o = {}) {
  if (j < 0 || j >= Dim) throw Error("lhs_line_integral: axis out of range");
  if (xi[j] == 0.0) return 0.0;
  return 2.0 * std::numbers::pi * std::abs(xi[j]) * ray_abs_integral<Dim>(phi, alpha, xi, o).integral;
}

/// rho^{-1} |d^a phi|_{L1} + rho |d^{a + 2 e_j} phi|_{L1}.
template <int Dim>
double rhs_constant(const Phi<Dim>& phi, const MultiIndex& alpha, int j, const BallLattice& lat = {}) {
  if (j < 0 || j >= Dim) throw Error("rhs_constant: axis out of range");
  const MultiIndex hi = alpha.plus(j, 2);
  if (hi.total() > kMaxMollifierOrder) throw Error("rhs_constant: derivative order out of range");
  return phi.l1(alpha, lat) / phi.rho() + phi.rho() * phi.l1(hi, lat);
}

template <int Dim>
struct FourierCase {
  MultiIndex alpha;
  int j = 0;
  Vec<Dim> xi{};
};

template <int Dim>
struct FourierBoundReport {
  std::string phi;
  double rho = 0.0;
  Vec<Dim> direction{};
  MultiIndex deriv;
  int j = 0;
  double lhs = 0.0;
  double tail = 0.0;  // error budget from truncation
  double rhs_constant = 0.0;
  double margin = 0.0;  // rhs - lhs - tail
  bool converged = true;
  bool ok = true;
};

/// Evaluates each case; report order follows the case list.
template <int Dim>
std::vector<FourierBoundReport<Dim>> verify_bounds(const Phi<Dim>& phi, const std::vector<FourierCase<Dim>>& cases,
                                                   double tolerance = 1e-5, const LineOptions& o = {}) {
  std::vector<FourierBoundReport<Dim>> out(cases.size());
  // One ray integral per distinct (alpha, xi); the axis only enters the prefactor.
  std::vector<std::size_t> owner(cases.size());
  for (std::size_t i = 0; i < cases.size(); ++i) {
    owner[i] = i;
    for (std::size_t k = 0; k < i; ++k)
      if (cases[k].alpha.orders == cases[i].alpha.orders && cases[k].xi == cases[i].xi) {
        owner[i] = k;
        break;
      }
  }
  std::vector<LineIntegral> rays(cases.size());
  parallel_for(cases.size(), [&](std::size_t i) {
    if (owner[i] == i) rays[i] = ray_abs_integral<Dim>(phi, cases[i].alpha, cases[i].xi, o);
  });
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    const LineIntegral& ray = rays[owner[i]];
    auto& r = out[i];
    r.phi = phi.label();
    r.rho = phi.rho();
    r.direction = (1.0 / norm<Dim>(c.xi)) * c.xi;
    r.deriv = c.alpha;
    r.j = c.j;
    const double pre = 2.0 * std::numbers::pi * std::abs(c.xi[c.j]);
    r.lhs = c.xi[c.j] == 0.0 ? 0.0 : pre * ray.integral;
    r.tail = c.xi[c.j] == 0.0 ? 0.0 : pre * ray.tail;
    r.converged = ray.converged;
    r.rhs_constant = rhs_constant(phi, c.alpha, c.j);
    r.margin = r.rhs_constant - r.lhs - r.tail;
    r.ok = r.margin >= -tolerance && r.converged;
  }
  return out;
}

/// Seeded unit directions, uniform on the sphere.
template <int Dim>
std::vector<Vec<Dim>> random_directions(int count, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Vec<Dim>> out;
  while (static_cast<int>(out.size()) < count) {
    Vec<Dim> v{};
    for (auto& c : v) c = g(rng);
    const double nv = norm<Dim>(v);
    if (nv < 1e-12) continue;
    out.push_back((1.0 / nv) * v);
  }
  return out;
}

/// The standard suite: each case is (direction, rho, phi option) and checks orders 0 and 1
/// (alpha in {0, e_1, ..., e_n}) against every axis j.
template <int Dim>
struct FourierSuiteCase {
  int index = 0;
  std::vector<FourierBoundReport<Dim>> rows;
  bool ok() const {
    return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.ok; });
  }
};

template <int Dim>
std::vector<FourierSuiteCase<Dim>> fourier_suite(unsigned long long seed, int directions = 32,
                                                 const std::vector<double>& rhos = {0.5, 1.0, 2.0},
                                                 double tolerance = 1e-5, const LineOptions& o = {}) {
  const auto dirs = random_directions<Dim>(directions, seed);
  std::vector<MultiIndex> alphas{MultiIndex::zero()};
  for (int a = 0; a < Dim; ++a) alphas.push_back(MultiIndex::unit(a));
  std::vector<FourierSuiteCase<Dim>> out;
  int index = 0;
  for (double rho : rhos)
    for (PhiKind kind : {PhiKind::omega, PhiKind::coord_times_omega}) {
      const Phi<Dim> phi(Mollifier<Dim>(Vec<Dim>{}, rho), kind, 0);
      std::vector<FourierCase<Dim>> cases;
      for (const auto& d : dirs)
        for (const auto& a : alphas)
          for (int j = 0; j < Dim; ++j) cases.push_back({a, j, d});
      const auto rows = verify_bounds<Dim>(phi, cases, tolerance, o);
      const std::size_t per = alphas.size() * Dim;
      for (std::size_t d = 0; d < dirs.size(); ++d) {
        FourierSuiteCase<Dim> c;
        c.index = index++;
        c.rows.assign(rows.begin() + d * per, rows.begin() + (d + 1) * per);
        out.push_back(std::move(c));
      }
    }
  return out;
}

}  // namespace bogolab
