#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <utility>

#include "bogolab/core.hpp"
#include "bogolab/stardomain.hpp"

namespace bogolab {

/// Analytic scalar field with derivative callbacks up to order two.
template <int Dim>
struct FieldSpec {
  std::string name;
  int dim_out = 1;
  std::function<double(const Vec<Dim>&)> value;
  std::function<Vec<Dim>(const Vec<Dim>&)> gradient;
  std::function<Mat<Dim>(const Vec<Dim>&)> hessian;
  bool zero_mean = false;

  bool has_gradient() const { return static_cast<bool>(gradient); }
  bool has_hessian() const { return static_cast<bool>(hessian); }

  FieldSpec scaled(double s) const {
    FieldSpec g = *this;
    g.value = [f = value, s](const Vec<Dim>& x) { return s * f(x); };
    if (gradient) g.gradient = [f = gradient, s](const Vec<Dim>& x) { return s * f(x); };
    if (hessian)
      g.hessian = [f = hessian, s](const Vec<Dim>& x) {
        Mat<Dim> h = f(x);
        for (auto& row : h)
          for (auto& v : row) v *= s;
        return h;
      };
    return g;
  }

  /// f - c, keeping derivatives; marks the result zero-mean.
  FieldSpec shifted(double c) const {
    FieldSpec g = *this;
    g.value = [f = value, c](const Vec<Dim>& x) { return f(x) - c; };
    g.zero_mean = true;
    return g;
  }
};

/// a f + b g.
template <int Dim>
FieldSpec<Dim> combine(double a, const FieldSpec<Dim>& f, double b, const FieldSpec<Dim>& g) {
  FieldSpec<Dim> h;
  h.name = f.name + "+" + g.name;
  h.zero_mean = f.zero_mean && g.zero_mean;
  h.value = [=](const Vec<Dim>& x) { return a * f.value(x) + b * g.value(x); };
  if (f.gradient && g.gradient)
    h.gradient = [=](const Vec<Dim>& x) { return a * f.gradient(x) + b * g.gradient(x); };
  if (f.hessian && g.hessian)
    h.hessian = [=](const Vec<Dim>& x) {
      Mat<Dim> m = f.hessian(x);
      const Mat<Dim> n = g.hessian(x);
      for (int i = 0; i < Dim; ++i)
        for (int j = 0; j < Dim; ++j) m[i][j] = a * m[i][j] + b * n[i][j];
      return m;
    };
  return h;
}

/// Mean of f over the domain under the given quadrature.
template <int Dim>
double field_mean(const FieldSpec<Dim>& f, const QuadratureRule<Dim>& q) {
  double s = 0.0, vol = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    s += q.weights[i] * f.value(q.nodes[i]);
    vol += q.weights[i];
  }
  return s / vol;
}

/// Returns f with its quadrature mean removed.
template <int Dim>
FieldSpec<Dim> zero_meaned(const FieldSpec<Dim>& f, const QuadratureRule<Dim>& q) {
  return f.shifted(field_mean(f, q));
}

/// Checks the FieldSpec invariants: zero mean (if flagged) and gradient consistency
/// with central differences at `samples` random interior points. Throws on failure.
template <int Dim>
void validate_field(const FieldSpec<Dim>& f, const StarDomain<Dim>& d, const QuadratureRule<Dim>& q,
                    int samples = 20, unsigned seed = 1) {
  if (!f.value) throw Error("field " + f.name + ": missing value callback");
  if (f.zero_mean) {
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double v = f.value(q.nodes[i]);
      s += q.weights[i] * v;
      s2 += q.weights[i] * v * v;
    }
    if (std::abs(s) > 1e-8 * std::sqrt(s2) * std::sqrt(d.volume()) + 1e-300)
      throw Error("field " + f.name + ": flagged zero-mean but mean is " + std::to_string(s));
  }
  if (!f.gradient) return;
  std::mt19937_64 rng(seed);
  auto [lo, hi] = d.bounding_box();
  int checked = 0;
  const double h = 1e-5 * d.diameter();
  while (checked < samples) {
    Vec<Dim> x{};
    for (int i = 0; i < Dim; ++i) x[i] = std::uniform_real_distribution<double>(lo[i], hi[i])(rng);
    if (!d.contains(x)) continue;
    const Vec<Dim> g = f.gradient(x);
    for (int j = 0; j < Dim; ++j) {
      Vec<Dim> xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const double fd = (f.value(xp) - f.value(xm)) / (2.0 * h);
      if (std::abs(fd - g[j]) > 1e-6 * std::max(1.0, std::abs(g[j])))
        throw Error("field " + f.name + ": gradient does not match finite differences");
    }
    ++checked;
  }
}

}  // namespace bogolab
