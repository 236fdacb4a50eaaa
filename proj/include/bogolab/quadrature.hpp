#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <vector>

#include "bogolab/core.hpp"

namespace bogolab {

/// One-dimensional rule: sum_i weights[i] * f(nodes[i]).
struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

namespace detail {

inline Rule1D compute_gauss_legendre(int n) {
  Rule1D rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 1; i <= m; ++i) {
    double z = std::cos(std::numbers::pi * (i - 0.25) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0;
      double p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    rule.nodes[i - 1] = -z;
    rule.nodes[n - i] = z;
    rule.weights[i - 1] = 2.0 / ((1.0 - z * z) * pp * pp);
    rule.weights[n - i] = rule.weights[i - 1];
  }
  return rule;
}

}  // namespace detail

/// Gauss-Legendre rule with n points on [-1, 1]; cached per n.
inline const Rule1D& gauss_legendre(int n) {
  if (n < 1) throw Error("gauss_legendre: need at least one node");
  static std::mutex mutex;
  static std::map<int, Rule1D> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, detail::compute_gauss_legendre(n)).first;
  return it->second;
}

/// Gauss-Legendre rule mapped to [a, b].
inline Rule1D gauss_on(double a, double b, int n) {
  const Rule1D& ref = gauss_legendre(n);
  Rule1D r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (int i = 0; i < n; ++i) {
    r.nodes[i] = mid + half * ref.nodes[i];
    r.weights[i] = half * ref.weights[i];
  }
  return r;
}

/// Composite Gauss-Legendre: `panels` equal panels of `n` points on [a, b].
inline Rule1D composite_gauss(double a, double b, int panels, int n) {
  Rule1D r;
  r.nodes.reserve(static_cast<std::size_t>(panels) * n);
  r.weights.reserve(static_cast<std::size_t>(panels) * n);
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const Rule1D piece = gauss_on(a + p * h, a + (p + 1) * h, n);
    r.nodes.insert(r.nodes.end(), piece.nodes.begin(), piece.nodes.end());
    r.weights.insert(r.weights.end(), piece.weights.begin(), piece.weights.end());
  }
  return r;
}

/// Composite Gauss over consecutive breakpoints; each interval gets enough
/// panels that no panel is wider than `max_width`.
inline Rule1D piecewise_gauss(const std::vector<double>& breaks, int n, double max_width) {
  Rule1D r;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double a = breaks[k];
    const double b = breaks[k + 1];
    if (!(b > a)) continue;
    const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / max_width - 1e-12)));
    const Rule1D piece = composite_gauss(a, b, panels, n);
    r.nodes.insert(r.nodes.end(), piece.nodes.begin(), piece.nodes.end());
    r.weights.insert(r.weights.end(), piece.weights.begin(), piece.weights.end());
  }
  return r;
}

/// Periodic trapezoid rule with n points on [0, 2*pi).
inline Rule1D periodic_trapezoid(int n, double offset = 0.0) {
  Rule1D r;
  r.nodes.resize(n);
  r.weights.assign(n, 2.0 * std::numbers::pi / n);
  for (int i = 0; i < n; ++i) r.nodes[i] = offset + 2.0 * std::numbers::pi * i / n;
  return r;
}

}  // namespace bogolab
