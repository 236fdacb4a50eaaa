#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bogolab/quadrature.hpp"

using namespace bogolab;

TEST(GaussLegendre, IntegratesPolynomialsExactly) {
  for (int n : {1, 2, 5, 16, 40}) {
    const Rule1D& r = gauss_legendre(n);
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], k);
      const double exact = k % 2 ? 0.0 : 2.0 / (k + 1);
      EXPECT_NEAR(s, exact, 1e-13) << "n=" << n << " k=" << k;
    }
  }
}

TEST(GaussLegendre, NodesSortedAndInside) {
  const Rule1D& r = gauss_legendre(33);
  for (std::size_t i = 0; i + 1 < r.size(); ++i) EXPECT_LT(r.nodes[i], r.nodes[i + 1]);
  EXPECT_GT(r.nodes.front(), -1.0);
  EXPECT_LT(r.nodes.back(), 1.0);
  EXPECT_THROW(gauss_legendre(0), Error);
}

TEST(CompositeGauss, SmoothIntegrand) {
  const Rule1D r = composite_gauss(0.0, 3.0, 7, 8);
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * std::exp(r.nodes[i]);
  EXPECT_NEAR(s, std::exp(3.0) - 1.0, 1e-12);
}

TEST(PiecewiseGauss, RespectsBreakpoints) {
  // |t - 0.3| is exact on each side of the kink.
  const Rule1D r = piecewise_gauss({-1.0, 0.3, 1.0}, 2, 10.0);
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * std::abs(r.nodes[i] - 0.3);
  EXPECT_NEAR(s, 0.5 * 1.3 * 1.3 + 0.5 * 0.7 * 0.7, 1e-14);
}

TEST(PeriodicTrapezoid, TrigonometricExactness) {
  const Rule1D r = periodic_trapezoid(16, 0.1);
  std::mt19937 rng(3);
  for (int k = 0; k < 15; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * std::cos(k * r.nodes[i]);
    EXPECT_NEAR(s, k == 0 ? 2.0 * std::numbers::pi : 0.0, 1e-13);
  }
}
