#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "bogolab/core.hpp"
#include "bogolab/field.hpp"
#include "bogolab/stardomain.hpp"

namespace bogolab {

/// One-variable factor g with g, g', g''.
struct Factor1D {
  std::string name;
  std::function<std::array<double, 3>(double)> eval;

  static Factor1D one() {
    return {"1", [](double) { return std::array<double, 3>{1.0, 0.0, 0.0}; }};
  }
  static Factor1D monomial(int k) {
    return {"t^" + std::to_string(k), [k](double t) {
              const double a = k >= 2 ? k * (k - 1) * std::pow(t, k - 2) : 0.0;
              const double b = k >= 1 ? k * std::pow(t, k - 1) : 0.0;
              return std::array<double, 3>{std::pow(t, k), b, a};
            }};
  }
  /// Legendre polynomial P_k(t / half).
  static Factor1D legendre(int k, double half) {
    return {"P" + std::to_string(k), [k, half](double t) {
              const double s = t / half;
              double p0 = 1.0, p1 = s, d0 = 0.0, d1 = 1.0, e0 = 0.0, e1 = 0.0;
              if (k == 0) return std::array<double, 3>{1.0, 0.0, 0.0};
              for (int n = 1; n < k; ++n) {
                const double p2 = ((2.0 * n + 1.0) * s * p1 - n * p0) / (n + 1.0);
                const double d2 = ((2.0 * n + 1.0) * (p1 + s * d1) - n * d0) / (n + 1.0);
                const double e2 = ((2.0 * n + 1.0) * (2.0 * d1 + s * e1) - n * e0) / (n + 1.0);
                p0 = p1, p1 = p2, d0 = d1, d1 = d2, e0 = e1, e1 = e2;
              }
              return std::array<double, 3>{p1, d1 / half, e1 / (half * half)};
            }};
  }
  static Factor1D sine(double freq) {
    return {"sin", [freq](double t) {
              return std::array<double, 3>{std::sin(freq * t), freq * std::cos(freq * t),
                                           -freq * freq * std::sin(freq * t)};
            }};
  }
  /// t * g(t).
  Factor1D times_t() const {
    return {name + "*t", [g = eval](double t) {
              const auto v = g(t);
              return std::array<double, 3>{v[0] * t, v[1] * t + v[0], v[2] * t + 2.0 * v[1]};
            }};
  }
  /// half^2 - t^2, vanishing at t = +-half.
  static Factor1D bubble(double half) {
    return {"b", [half](double t) { return std::array<double, 3>{half * half - t * t, -2.0 * t, -2.0}; }};
  }
};

/// Sum of products of one-variable factors.
template <int Dim>
struct SeparableTerm {
  double coeff = 1.0;
  std::array<Factor1D, Dim> factors;
};

template <int Dim>
FieldSpec<Dim> separable_field(std::string name, std::vector<SeparableTerm<Dim>> terms) {
  auto shared = std::make_shared<std::vector<SeparableTerm<Dim>>>(std::move(terms));
  auto tables = [shared](const Vec<Dim>& x) {
    std::vector<std::array<std::array<double, 3>, Dim>> out(shared->size());
    for (std::size_t t = 0; t < shared->size(); ++t)
      for (int i = 0; i < Dim; ++i) out[t][i] = (*shared)[t].factors[i].eval(x[i]);
    return out;
  };
  FieldSpec<Dim> f;
  f.name = std::move(name);
  f.value = [shared, tables](const Vec<Dim>& x) {
    const auto tb = tables(x);
    double s = 0.0;
    for (std::size_t t = 0; t < tb.size(); ++t) {
      double p = (*shared)[t].coeff;
      for (int i = 0; i < Dim; ++i) p *= tb[t][i][0];
      s += p;
    }
    return s;
  };
  f.gradient = [shared, tables](const Vec<Dim>& x) {
    const auto tb = tables(x);
    Vec<Dim> g{};
    for (std::size_t t = 0; t < tb.size(); ++t)
      for (int j = 0; j < Dim; ++j) {
        double p = (*shared)[t].coeff;
        for (int i = 0; i < Dim; ++i) p *= tb[t][i][i == j ? 1 : 0];
        g[j] += p;
      }
    return g;
  };
  f.hessian = [shared, tables](const Vec<Dim>& x) {
    const auto tb = tables(x);
    Mat<Dim> h{};
    for (std::size_t t = 0; t < tb.size(); ++t)
      for (int j = 0; j < Dim; ++j)
        for (int l = 0; l < Dim; ++l) {
          double p = (*shared)[t].coeff;
          for (int i = 0; i < Dim; ++i) p *= tb[t][i][(i == j) + (i == l)];
          h[j][l] += p;
        }
    return h;
  };
  return f;
}

/// Single product term c * prod_i g_i(x_i).
template <int Dim>
FieldSpec<Dim> product_field(std::string name, std::array<Factor1D, Dim> factors, double c = 1.0) {
  return separable_field<Dim>(std::move(name), {SeparableTerm<Dim>{c, std::move(factors)}});
}

/// Coordinate function x_axis.
template <int Dim>
FieldSpec<Dim> coordinate_field(int axis) {
  std::array<Factor1D, Dim> fs;
  for (int i = 0; i < Dim; ++i) fs[i] = i == axis ? Factor1D::monomial(1) : Factor1D::one();
  return product_field<Dim>("x" + std::to_string(axis + 1), fs);
}

/// Half-widths of the bounding box, used to scale candidate factors.
template <int Dim>
Vec<Dim> half_widths(const StarDomain<Dim>& d) {
  const auto [lo, hi] = d.bounding_box();
  Vec<Dim> h{};
  for (int i = 0; i < Dim; ++i) h[i] = 0.5 * (hi[i] - lo[i]);
  return h;
}

/// Named candidate sets, all zero-meaned under q.
///   "basic":   x1, x1 x2, sin(pi x1 / a) x2
///   "default": x1, x2, x1 x2, sin(pi x1/(2a)) x2, Legendre products P_i P_j (1 <= i + j <= 3)
///   "bubble":  fields vanishing on the boundary (box bubble, or r^2 - |x|^2 on balls) times low-order terms
template <int Dim>
std::vector<FieldSpec<Dim>> candidate_set(const std::string& name, const StarDomain<Dim>& d,
                                          const QuadratureRule<Dim>& q) {
  const Vec<Dim> h = half_widths(d);
  std::vector<FieldSpec<Dim>> out;
  auto lift = [&](std::string label, std::array<Factor1D, Dim> fs) {
    out.push_back(zero_meaned(product_field<Dim>(std::move(label), std::move(fs)), q));
  };
  auto ones = [] {
    std::array<Factor1D, Dim> fs;
    for (auto& f : fs) f = Factor1D::one();
    return fs;
  };
  using F = Factor1D;
  if (name == "basic") {
    auto a = ones();
    a[0] = F::monomial(1);
    lift("x1", a);
    a[1] = F::monomial(1);
    lift("x1*x2", a);
    a[0] = F::sine(std::numbers::pi / h[0]);
    lift("sin(pi*x1/a)*x2", a);
  } else if (name == "default") {
    auto a = ones();
    a[0] = F::monomial(1);
    lift("x1", a);
    a = ones();
    a[1] = F::monomial(1);
    lift("x2", a);
    a = ones();
    a[0] = F::monomial(1);
    a[1] = F::monomial(1);
    lift("x1*x2", a);
    a = ones();
    a[0] = F::sine(std::numbers::pi / (2.0 * h[0]));
    a[1] = F::monomial(1);
    lift("sin(pi*x1/(2a))*x2", a);
    for (int total = 2; total <= 3; ++total)
      for (int i = 0; i <= total; ++i) {
        const int j = total - i;
        a = ones();
        a[0] = F::legendre(i, h[0]);
        a[1] = F::legendre(j, h[1]);
        lift("P" + std::to_string(i) + "(x1)*P" + std::to_string(j) + "(x2)", a);
      }
  } else if (name == "bubble" && d.kind() == DomainKind::ball) {
    // (r^2 - |x|^2) times x1, x2, x1 x2, expanded into separable terms.
    const double r2 = h[0] * h[0];
    auto radial = [&](std::string label, std::array<int, Dim> pw) {
      std::vector<SeparableTerm<Dim>> terms;
      auto term = [&](double c, std::array<int, Dim> e) {
        SeparableTerm<Dim> t{c, {}};
        for (int i = 0; i < Dim; ++i) t.factors[i] = e[i] == 0 ? F::one() : F::monomial(e[i]);
        terms.push_back(std::move(t));
      };
      term(r2, pw);
      for (int k = 0; k < Dim; ++k) {
        auto e = pw;
        e[k] += 2;
        term(-1.0, e);
      }
      out.push_back(zero_meaned(separable_field<Dim>(std::move(label), std::move(terms)), q));
    };
    std::array<int, Dim> pw{};
    pw[0] = 1;
    radial("radial_bubble*x1", pw);
    pw = {};
    pw[1] = 1;
    radial("radial_bubble*x2", pw);
    pw[0] = 1;
    radial("radial_bubble*x1*x2", pw);
  } else if (name == "bubble") {
    auto bub = ones();
    for (int i = 0; i < Dim; ++i) bub[i] = F::bubble(h[i]);
    auto a = bub;
    a[0] = F::bubble(h[0]).times_t();
    lift("bubble*x1", a);
    a = bub;
    a[1] = F::bubble(h[1]).times_t();
    lift("bubble*x2", a);
    a = bub;
    a[0] = F::bubble(h[0]).times_t();
    a[1] = F::bubble(h[1]).times_t();
    lift("bubble*x1*x2", a);
  } else {
    throw Error("unknown candidate set '" + name + "'");
  }
  return out;
}

}  // namespace bogolab
