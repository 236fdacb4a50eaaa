#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bogolab/identities.hpp"

using namespace bogolab;

TEST(Poly, DerivativesCommute) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Poly p = random_poly(3, 1 + trial % 6, rng);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) EXPECT_TRUE(p.deriv(a).deriv(b) == p.deriv(b).deriv(a));
  }
}

TEST(Poly, ArithmeticAndEvaluation) {
  std::mt19937_64 rng(4);
  const Poly p = random_poly(2, 3, rng), q = random_poly(2, 2, rng);
  const Vec<2> x{0.3, -0.7};
  EXPECT_NEAR((p * q).eval<2>(x), p.eval<2>(x) * q.eval<2>(x), 1e-14);
  EXPECT_NEAR((p - 2.0 * q).eval<2>(x), p.eval<2>(x) - 2.0 * q.eval<2>(x), 1e-14);
  EXPECT_TRUE((p - p).is_zero());
  EXPECT_EQ((p * q).degree(), 5);
  // d/dx of x^3 y at x: 3x^2 y
  const Poly m = Poly::monomial({3, 1, 0}, 2.0);
  EXPECT_TRUE(m.deriv(0) == Poly::monomial({2, 1, 0}, 6.0));
  EXPECT_TRUE(m.deriv(2).is_zero());
  EXPECT_THROW(random_poly(2, 7, rng), Error);
}

TEST(Poly, CenteredBoxIntegral) {
  // int_{-a}^{a} int_{-b}^{b} x^2 y^4 = (2a^3/3)(2b^5/5)
  const Poly p = Poly::monomial({2, 4, 0}) + Poly::monomial({1, 0, 0}, 5.0);
  const double a = 0.7, b = 1.3;
  EXPECT_NEAR(p.integrate_centered_box<2>({a, b}), (2.0 * std::pow(a, 3) / 3.0) * (2.0 * std::pow(b, 5) / 5.0), 1e-14);
}

TEST(CurlGrad, LinearFieldVanishes) {
  PolyField u = PolyField::vector(3);
  u(0) = Poly::variable(1);
  EXPECT_EQ(curl_grad_identity(u), 0.0);
}

TEST(CurlGrad, RandomPolynomialsExactlyZero) {
  std::mt19937_64 rng(100);
  for (int trial = 0; trial < 100; ++trial) {
    const PolyField u = random_vector_field(3, 1 + trial % 5, rng);
    EXPECT_EQ(curl_grad_identity(u), 0.0) << trial;
  }
}

TEST(CurlGrad, DifferenceIsNontrivialWithoutTheFactorTwo) {
  // Sanity: grad(curl u)^T differs from curl(grad_S u) alone for a generic cubic.
  std::mt19937_64 rng(9);
  const PolyField u = random_vector_field(3, 3, rng);
  const PolyField c = curl(u), r = row_curl(sym_gradient(u));
  double worst = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) worst = std::max(worst, (c(j).deriv(i) - r(i, j)).max_abs_coefficient());
  EXPECT_GT(worst, 1e-3);
}

TEST(CurlGrad, FiniteDifferenceCrossCheck) {
  auto u = [](const Vec<3>& x) { return Vec<3>{std::sin(x[1]), std::cos(x[2]), x[0] * x[1]}; };
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> d(-1.5, 1.5);
  for (int k = 0; k < 10; ++k) EXPECT_LE(curl_grad_identity_fd(u, {d(rng), d(rng), d(rng)}), 1e-6);
}

TEST(CurlGrad, RejectsTwoDimensionalField) {
  EXPECT_THROW(curl_grad_identity(PolyField::vector(2)), Error);
}

TEST(Pairing, SymmetricTensorsAgree) {
  std::mt19937_64 rng(31);
  const auto rect = StarDomain<2>::rectangle(1.0, 0.25);
  for (int trial = 0; trial < 20; ++trial) {
    const PolyField v = random_vector_field(2, 3, rng);
    const PolyField tau = symmetric_part(random_tensor_field(2, 2, rng));
    const auto r = symmetric_pairing_check<2>(v, tau, rect);
    EXPECT_LE(r.discrepancy, 1e-12);
    EXPECT_NEAR(r.by_parts, r.grad_pairing, 1e-12);
  }
  const auto box = StarDomain<3>::box(0.5, 0.75, 1.0);
  const auto r3 = symmetric_pairing_check<3>(random_vector_field(3, 2, rng),
                                             symmetric_part(random_tensor_field(3, 1, rng)), box);
  EXPECT_LE(r3.discrepancy, 1e-12);
  EXPECT_NEAR(r3.by_parts, r3.grad_pairing, 1e-12);
}

TEST(Pairing, SkewControlCase) {
  std::mt19937_64 rng(32);
  const auto rect = StarDomain<2>::rectangle(1.0, 0.5);
  const PolyField v = random_vector_field(2, 3, rng);
  const PolyField tau = skew_part(random_tensor_field(2, 2, rng));
  const auto r = tensor_pairings<2>(v, tau, rect);
  EXPECT_NEAR(r.sym_pairing, 0.0, 1e-14);
  EXPECT_GT(r.discrepancy, 1e-4);
  EXPECT_THROW(symmetric_pairing_check<2>(v, tau, rect), Error);
}

TEST(Pairing, BubbleIdentityRadialField) {
  const auto rect = StarDomain<2>::rectangle(1.0, 0.5);
  PolyField v = PolyField::vector(2);
  v(0) = Poly::variable(0);
  v(1) = Poly::variable(1);
  PolyField id = PolyField::tensor(2);
  id(0, 0) = id(1, 1) = Poly::constant(1.0);
  const auto r = symmetric_pairing_check<2>(v, id, rect);
  // -int x . grad b = 2 int b for b = (1 - x^2)(1/4 - y^2): 2 * (4/3) * (1/6).
  const double expected = 2.0 * (4.0 / 3.0) * (1.0 / 6.0);
  EXPECT_NEAR(r.grad_pairing, expected, 1e-14);
  EXPECT_NEAR(r.sym_pairing, expected, 1e-14);
  EXPECT_NEAR(r.by_parts, expected, 1e-14);
}

TEST(ScalarCurl, TwoDimensionalConvention) {
  PolyField v = PolyField::vector(2);
  v(0) = Poly::monomial({0, 1, 0}, -1.0);  // (-y, x): curl 2
  v(1) = Poly::variable(0);
  EXPECT_TRUE(scalar_curl(v) == Poly::constant(2.0));
  EXPECT_THROW(scalar_curl(PolyField::vector(3)), Error);
}
