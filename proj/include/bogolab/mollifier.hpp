#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <initializer_list>
#include <vector>

#include "bogolab/core.hpp"
#include "bogolab/quadrature.hpp"

namespace bogolab {

/// Derivative multi-index (alpha_1, ..., alpha_n); only total order <= 3 is evaluated.
struct MultiIndex {
  std::array<int, 3> orders{0, 0, 0};

  static constexpr MultiIndex zero() { return {}; }
  static constexpr MultiIndex unit(int axis) {
    MultiIndex m;
    m.orders[axis] = 1;
    return m;
  }
  static MultiIndex of(std::initializer_list<int> entries) {
    MultiIndex m;
    int i = 0;
    for (int e : entries) {
      if (i >= 3 || e < 0) throw Error("MultiIndex: invalid entries");
      m.orders[i++] = e;
    }
    return m;
  }

  constexpr int total() const { return orders[0] + orders[1] + orders[2]; }

  constexpr MultiIndex plus(int axis, int count = 1) const {
    MultiIndex m = *this;
    m.orders[axis] += count;
    return m;
  }

  /// Axis list, e.g. (2,1,0) -> {0,0,1}.
  std::vector<int> axes() const {
    std::vector<int> out;
    for (int a = 0; a < 3; ++a)
      for (int c = 0; c < orders[a]; ++c) out.push_back(a);
    return out;
  }

  friend constexpr bool operator==(const MultiIndex&, const MultiIndex&) = default;
};

inline constexpr int kMaxMollifierOrder = 3;

namespace detail {

/// g_k(s) = d^k/ds^k exp(-1/(1-s)) for k = 0..3, zero for s >= 1.
inline std::array<double, 4> bump_profile(double s) {
  if (s >= 1.0) return {0.0, 0.0, 0.0, 0.0};
  const double q = 1.0 / (1.0 - s);
  if (q > 700.0) return {0.0, 0.0, 0.0, 0.0};
  const double e = std::exp(-q);
  const double q2 = q * q;
  const double q3 = q2 * q;
  const double q4 = q2 * q2;
  return {e, -q2 * e, (q4 - 2.0 * q3) * e, (-q4 * q2 + 6.0 * q4 * q - 6.0 * q4) * e};
}

/// Partial derivative of exp(-1/(1-|y|^2)) along the listed axes (at most three).
template <int Dim>
double bump_partial(const std::vector<int>& ax, const Vec<Dim>& y) {
  const double s = dot<Dim>(y, y);
  const auto g = bump_profile(s);
  auto delta = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  switch (ax.size()) {
    case 0:
      return g[0];
    case 1:
      return 2.0 * y[ax[0]] * g[1];
    case 2: {
      const int i = ax[0], j = ax[1];
      return 4.0 * y[i] * y[j] * g[2] + 2.0 * delta(i, j) * g[1];
    }
    case 3: {
      const int i = ax[0], j = ax[1], k = ax[2];
      return 8.0 * y[i] * y[j] * y[k] * g[3] +
             4.0 * (delta(i, j) * y[k] + delta(i, k) * y[j] + delta(j, k) * y[i]) * g[2];
    }
    default:
      throw Error("mollifier derivative order above 3");
  }
}

/// Integral of exp(-1/(1-|y|^2)) over the unit ball of R^dim.
inline double bump_mass(int dim) {
  const Rule1D r = composite_gauss(0.0, 1.0, 64, 16);
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i)
    s += r.weights[i] * std::pow(r.nodes[i], dim - 1) * bump_profile(r.nodes[i] * r.nodes[i])[0];
  return unit_sphere_area(dim) * s;
}

}  // namespace detail

/// L1 and sup norms of a derivative.
struct NormPair {
  double l1 = 0.0;
  double linf = 0.0;
};

/// Resolution of the polar lattice used for norms of functions supported in a ball.
struct BallLattice {
  int radial_panels = 64;   // radial profiles of |d^a omega| also have kinks; third derivatives need this many
  int radial_points = 24;
  int radial_panels_3d = 16;
  int radial_points_3d = 16;
  int angular = 4096;   // azimuthal trapezoid points (2D); |d^a omega| has kinks, so this is only O(h^2)
  int angular_3d = 512;
  int polar = 128;    // 3D only: Gauss points in cos(polar angle)
  int sup_radial = 200;
  int sup_angular = 128;
};

/// Value and derivatives up to order two at one point.
template <int Dim>
struct Jet2 {
  double value = 0.0;
  Vec<Dim> grad{};
  Mat<Dim> hess{};
};

/// Integrates |fn| over B_rho(center) by polar quadrature, and samples max |fn|.
template <int Dim, typename Fn>
NormPair ball_norms(Fn&& fn, const Vec<Dim>& center, double rho, const BallLattice& lat = {}) {
  check_dim<Dim>();
  NormPair out;
  const Rule1D radial = Dim == 2 ? composite_gauss(0.0, rho, lat.radial_panels, lat.radial_points)
                                 : composite_gauss(0.0, rho, lat.radial_panels_3d, lat.radial_points_3d);
  const int nphi = Dim == 2 ? lat.angular : lat.angular_3d;
  const Rule1D phi = periodic_trapezoid(nphi, std::numbers::pi / nphi);
  if constexpr (Dim == 2) {
    for (std::size_t a = 0; a < phi.size(); ++a) {
      const double c = std::cos(phi.nodes[a]), s = std::sin(phi.nodes[a]);
      double line = 0.0;
      for (std::size_t i = 0; i < radial.size(); ++i) {
        const double r = radial.nodes[i];
        line += radial.weights[i] * r * std::abs(fn(Vec<2>{center[0] + r * c, center[1] + r * s}));
      }
      out.l1 += phi.weights[a] * line;
    }
  } else {
    const Rule1D mu = gauss_on(-1.0, 1.0, lat.polar);
    for (std::size_t p = 0; p < mu.size(); ++p) {
      const double ct = mu.nodes[p], st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
      for (std::size_t a = 0; a < phi.size(); ++a) {
        const Vec<3> dir{st * std::cos(phi.nodes[a]), st * std::sin(phi.nodes[a]), ct};
        double line = 0.0;
        for (std::size_t i = 0; i < radial.size(); ++i) {
          const double r = radial.nodes[i];
          line += radial.weights[i] * r * r * std::abs(fn(center + r * dir));
        }
        out.l1 += mu.weights[p] * phi.weights[a] * line;
      }
    }
  }
  // Sup norm: radial-angular lattice (3D adds a polar sweep of the same angular size / 2).
  for (int i = 1; i <= lat.sup_radial; ++i) {
    const double r = rho * i / (lat.sup_radial + 1.0);
    for (int a = 0; a < lat.sup_angular; ++a) {
      const double t = 2.0 * std::numbers::pi * a / lat.sup_angular;
      if constexpr (Dim == 2) {
        out.linf = std::max(out.linf, std::abs(fn(Vec<2>{center[0] + r * std::cos(t), center[1] + r * std::sin(t)})));
      } else {
        const int npol = std::max(2, lat.sup_angular / 2);
        for (int b = 0; b <= npol; ++b) {
          const double th = std::numbers::pi * b / npol;
          const Vec<3> dir{std::sin(th) * std::cos(t), std::sin(th) * std::sin(t), std::cos(th)};
          out.linf = std::max(out.linf, std::abs(fn(center + r * dir)));
        }
      }
    }
  }
  out.linf = std::max(out.linf, std::abs(fn(center)));
  return out;
}

/// The bump omega(x) = c_n rho^{-n} psi((x - center)/rho), psi(y) = exp(-1/(1-|y|^2)),
/// supported in B_rho(center) with unit integral.
template <int Dim>
class Mollifier {
 public:
  Mollifier(const Vec<Dim>& center, double rho) : center_(center), rho_(rho) {
    check_dim<Dim>();
    if (!(rho > 0.0) || !std::isfinite(rho)) throw Error("mollifier radius must be positive");
    scale_ = 1.0 / (reference_mass() * std::pow(rho_, Dim));
  }

  /// Integral of the unnormalized reference bump over the unit ball.
  static double reference_mass() {
    static const double mass = detail::bump_mass(Dim);
    return mass;
  }

  /// c_n, the constant that makes the reference bump a unit-mass density.
  static double reference_constant() { return 1.0 / reference_mass(); }

  const Vec<Dim>& center() const { return center_; }
  double rho() const { return rho_; }
  static constexpr int dim() { return Dim; }

  /// c_n rho^{-n}.
  double normalization() const { return scale_; }

  double eval(const Vec<Dim>& x) const {
    const Vec<Dim> y = (1.0 / rho_) * (x - center_);
    return scale_ * detail::bump_profile(dot<Dim>(y, y))[0];
  }

  double eval_deriv(const MultiIndex& alpha, const Vec<Dim>& x) const {
    if (alpha.total() > kMaxMollifierOrder) throw Error("eval_deriv: derivative order above 3");
    for (int a = Dim; a < 3; ++a)
      if (alpha.orders[a] != 0) throw Error("eval_deriv: multi-index exceeds dimension");
    const Vec<Dim> y = (1.0 / rho_) * (x - center_);
    return scale_ * std::pow(rho_, -alpha.total()) * detail::bump_partial<Dim>(alpha.axes(), y);
  }

  /// Value, gradient and Hessian in one profile evaluation.
  Jet2<Dim> jet(const Vec<Dim>& x) const {
    Jet2<Dim> j;
    const double inv = 1.0 / rho_;
    const Vec<Dim> y = inv * (x - center_);
    const auto g = detail::bump_profile(dot<Dim>(y, y));
    if (g[0] == 0.0) return j;
    j.value = scale_ * g[0];
    const double c1 = scale_ * inv * 2.0 * g[1];
    const double c2 = scale_ * inv * inv;
    for (int a = 0; a < Dim; ++a) {
      j.grad[a] = c1 * y[a];
      for (int b = 0; b < Dim; ++b)
        j.hess[a][b] = c2 * (4.0 * y[a] * y[b] * g[2] + (a == b ? 2.0 * g[1] : 0.0));
    }
    return j;
  }

  NormPair norm_table(const MultiIndex& alpha, const BallLattice& lat = {}) const {
    if (alpha.total() > kMaxMollifierOrder) throw Error("norm_table: derivative order above 3");
    return ball_norms<Dim>([&](const Vec<Dim>& x) { return eval_deriv(alpha, x); }, center_, rho_, lat);
  }

 private:
  Vec<Dim> center_;
  double rho_;
  double scale_ = 0.0;
};

template <int Dim>
Mollifier<Dim> make_mollifier(const Vec<Dim>& center, double rho) {
  return Mollifier<Dim>(center, rho);
}

}  // namespace bogolab
