#include <gtest/gtest.h>

#include <fftw3.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "bogolab/fourier.hpp"

using namespace bogolab;

namespace {

constexpr double kPi = std::numbers::pi;

// omega-hat of the radial 2D mollifier by the Hankel transform.
double hankel_hat(const Mollifier<2>& m, double t, const Rule1D& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i)
    s += r.weights[i] * m.eval({r.nodes[i], 0.0}) * std::cyl_bessel_j(0.0, 2.0 * kPi * t * r.nodes[i]) * r.nodes[i];
  return 2.0 * kPi * s;
}

// L1 norm of d^a omega in polar coordinates: radial pieces split at sign changes
// (adaptive Gauss-Kronrod per piece and in the angle).
double polar_l1_oracle(const Mollifier<2>& m, const MultiIndex& a) {
  using boost::math::quadrature::gauss_kronrod;
  const double rho = m.rho();
  auto radial = [&](double phi) {
    auto g = [&](double r) { return m.eval_deriv(a, {r * std::cos(phi), r * std::sin(phi)}); };
    std::vector<double> br{0.0};
    const int grid = 400;
    double prev = g(1e-12);
    for (int k = 1; k <= grid; ++k) {
      const double r1 = rho * k / grid * (1.0 - 1e-12);
      const double cur = g(r1);
      if ((cur < 0.0) != (prev < 0.0) && cur != 0.0 && prev != 0.0) {
        std::uintmax_t it = 100;
        const auto bracket = boost::math::tools::toms748_solve(
            g, rho * (k - 1) / grid, r1, prev, cur, boost::math::tools::eps_tolerance<double>(50), it);
        br.push_back(0.5 * (bracket.first + bracket.second));
      }
      prev = cur;
    }
    br.push_back(rho);
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < br.size(); ++k)
      if (br[k + 1] > br[k])
        s += gauss_kronrod<double, 31>::integrate([&](double r) { return std::abs(g(r)) * r; }, br[k], br[k + 1], 10,
                                                  1e-13);
    return s;
  };
  return gauss_kronrod<double, 61>::integrate(radial, 0.0, 2.0 * kPi, 20, 1e-12);
}

}  // namespace

TEST(Fourier, TransformAtOriginIsUnitMass) {
  for (double rho : {0.5, 1.0, 2.0}) {
    const auto v = fourier_transform(Mollifier<2>({0.0, 0.0}, rho), MultiIndex::zero(), {0.0, 0.0});
    EXPECT_NEAR(v.direct.real(), 1.0, 1e-12);
    EXPECT_NEAR(v.direct.imag(), 0.0, 1e-14);
  }
}

TEST(Fourier, MultiplierIdentityBothRoutes) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const Mollifier<2> m({0.0, 0.0}, 1.0);
  for (PhiKind kind : {PhiKind::omega, PhiKind::coord_times_omega}) {
    const Phi<2> phi(m, kind, 0);
    for (int i = 0; i < 10; ++i) {
      const Vec<2> xi{u(rng), u(rng)};
      for (int axis = 0; axis < 2; ++axis)
        EXPECT_LT(fourier_transform(phi, MultiIndex::unit(axis), xi).discrepancy, 1e-8) << phi.label();
    }
  }
}

TEST(Fourier, OmegaPropertyIsProductRule) {
  // x_k omega has transform (i / 2 pi) d/dxi_k of omega-hat; compare a central difference in xi.
  const Mollifier<2> m({0.0, 0.0}, 1.0);
  const Phi<2> xo(m, PhiKind::coord_times_omega, 1);
  const Vec<2> xi{0.4, -0.9};
  const double h = 2e-3;
  auto hat = [&](double d) { return fourier_transform(m, MultiIndex::zero(), {xi[0], xi[1] + d}).direct; };
  const std::complex<double> d1 = (8.0 * (hat(h) - hat(-h)) - (hat(2.0 * h) - hat(-2.0 * h))) / (12.0 * h);
  const std::complex<double> expected = std::complex<double>(0.0, 1.0 / (2.0 * kPi)) * d1;
  EXPECT_LT(std::abs(fourier_transform(xo, MultiIndex::zero(), xi).direct - expected), 1e-8);
}

TEST(Fourier, MatchesZeroPaddedFft) {
  // Trapezoid on [-2, 2)^2 with 1024^2 samples is spectrally accurate for a compactly supported
  // smooth function; bin (4, 0) is xi = (1, 0).
  const int n = 1024;
  const double len = 4.0, h = len / n;
  const Mollifier<2> m({0.0, 0.0}, 1.0);
  fftw_complex* data = fftw_alloc_complex(static_cast<std::size_t>(n) * n);
  fftw_plan plan = fftw_plan_dft_2d(n, n, data, data, FFTW_FORWARD, FFTW_ESTIMATE);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      data[a * n + b][0] = m.eval({-2.0 + a * h, -2.0 + b * h});
      data[a * n + b][1] = 0.0;
    }
  fftw_execute(plan);
  // xi = (1, 0): row index 4, column 0; shift phase exp(-2 pi i xi . (-2, -2)) = 1.
  const std::complex<double> fft(h * h * data[4 * n][0], h * h * data[4 * n][1]);
  fftw_destroy_plan(plan);
  fftw_free(data);
  const auto v = fourier_transform(m, MultiIndex::zero(), {1.0, 0.0});
  EXPECT_LT(std::abs(v.direct - fft), 1e-6);
}

TEST(Fourier, LineIntegralZeroComponent) {
  const Phi<2> phi(Mollifier<2>({0.0, 0.0}, 1.0));
  EXPECT_EQ(lhs_line_integral<2>(phi, MultiIndex::zero(), 1, {1.0, 0.0}), 0.0);
  const auto rows = verify_bounds<2>(phi, {{MultiIndex::zero(), 1, {1.0, 0.0}}});
  EXPECT_EQ(rows[0].lhs, 0.0);
  EXPECT_DOUBLE_EQ(rows[0].margin, rows[0].rhs_constant);
}

TEST(Fourier, LineIntegralScaleInvariant) {
  const Phi<2> phi(Mollifier<2>({0.0, 0.0}, 1.0), PhiKind::coord_times_omega, 0);
  const Vec<2> xi{0.6, -0.8};
  for (const auto& a : {MultiIndex::zero(), MultiIndex::unit(1)}) {
    const double one = lhs_line_integral<2>(phi, a, 0, xi);
    const double two = lhs_line_integral<2>(phi, a, 0, {2.0 * xi[0], 2.0 * xi[1]});
    EXPECT_NEAR(two / one, 1.0, 1e-8);
  }
}

TEST(Fourier, LineIntegralMatchesTrapezoidOracle) {
  // 10^5-panel trapezoid of |omega-hat(t e_1)| on [0, 40]; beyond 40 |omega-hat| < 2e-9.
  const Mollifier<2> m({0.0, 0.0}, 1.0);
  const Rule1D r = composite_gauss(0.0, 1.0, 16, 24);
  const int panels = 100000;
  const double tmax = 40.0;
  double s = 0.0;
  for (int k = 0; k <= panels; ++k) {
    const double w = (k == 0 || k == panels) ? 0.5 : 1.0;
    s += w * std::abs(hankel_hat(m, tmax * k / panels, r));
  }
  const double oracle = 2.0 * kPi * s * tmax / panels;
  EXPECT_NEAR(lhs_line_integral<2>(Phi<2>(m), MultiIndex::zero(), 0, {1.0, 0.0}), oracle, 1e-6);
}

TEST(Fourier, RhsConstantDefinition) {
  const Mollifier<2> m({0.0, 0.0}, 0.7);
  const Phi<2> phi(m);
  for (int j = 0; j < 2; ++j) {
    const double expected = m.norm_table(MultiIndex::zero()).l1 / 0.7 + 0.7 * m.norm_table(MultiIndex::unit(j).plus(j)).l1;
    EXPECT_NEAR(rhs_constant(phi, MultiIndex::zero(), j), expected, 1e-12);
  }
  EXPECT_THROW(rhs_constant(phi, MultiIndex::of({2, 0}), 0), Error);
  EXPECT_THROW(rhs_constant(phi, MultiIndex::zero(), 2), Error);
}

TEST(Fourier, RhsConstantRhoScaling) {
  const Phi<2> small(Mollifier<2>({0.0, 0.0}, 1.0)), big(Mollifier<2>({0.0, 0.0}, 2.0));
  for (int j = 0; j < 2; ++j)
    EXPECT_NEAR(rhs_constant(big, MultiIndex::zero(), j) / rhs_constant(small, MultiIndex::zero(), j), 0.5, 1e-6);
}

TEST(Fourier, RhsFirstOrderMatchesPolarOracle) {
  const Mollifier<2> m({0.0, 0.0}, 1.0);
  const Phi<2> phi(m);
  const MultiIndex e2 = MultiIndex::unit(1);
  const double oracle = polar_l1_oracle(m, e2) + polar_l1_oracle(m, e2.plus(1, 2));
  EXPECT_NEAR(rhs_constant(phi, e2, 1) / oracle, 1.0, 1e-6);
}

TEST(Fourier, VerifyBoundsSmallSuite) {
  const auto suite = fourier_suite<2>(3, 4, {1.0});
  ASSERT_EQ(suite.size(), 8u);
  for (const auto& c : suite) {
    EXPECT_TRUE(c.ok());
    for (const auto& row : c.rows) {
      EXPECT_TRUE(row.converged);
      EXPECT_LT(row.tail, 1e-6);
      EXPECT_GE(row.margin, -1e-5);
    }
  }
}

TEST(Fourier, ThreeDimensionalTransform) {
  const Mollifier<3> m({0.0, 0.0, 0.0}, 1.0);
  EXPECT_NEAR(fourier_transform(m, MultiIndex::zero(), {0.0, 0.0, 0.0}).direct.real(), 1.0, 1e-9);
  EXPECT_LT(fourier_transform(m, MultiIndex::unit(2), {0.3, -0.2, 0.5}).discrepancy, 1e-7);
}

TEST(Fourier, RejectsHighOrder) {
  const Mollifier<2> m({0.0, 0.0}, 1.0);
  EXPECT_THROW(fourier_transform(m, MultiIndex::of({2, 2}), {0.0, 0.0}), Error);
}
