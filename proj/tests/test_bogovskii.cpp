#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bogolab/bogovskii.hpp"
#include "bogolab/candidates.hpp"
#include "support/oracles.hpp"

using namespace bogolab;
using namespace bogolab::oracle;

namespace {

FieldSpec<2> zero_field() {
  FieldSpec<2> f;
  f.name = "0";
  f.zero_mean = true;
  f.value = [](const Vec<2>&) { return 0.0; };
  f.gradient = [](const Vec<2>&) { return Vec<2>{}; };
  f.hessian = [](const Vec<2>&) { return Mat<2>{}; };
  return f;
}

FieldSpec<2> x1_field() {
  auto f = coordinate_field<2>(0);
  f.zero_mean = true;  // odd in x1 on centred domains
  return f;
}

}  // namespace

TEST(KernelEval, RayMissingBallIsZero) {
  const KernelSpec<2> k{Mollifier<2>({0, 0}, 0.2), MultiIndex::zero()};
  const Vec<2> g = kernel_eval(k, {0.9, 0.0}, {0.5, 0.0});
  EXPECT_EQ(g[0], 0.0);
  EXPECT_EQ(g[1], 0.0);
  EXPECT_THROW(kernel_eval(k, {0.1, 0.1}, {0.1, 0.1}), Error);
}

TEST(KernelEval, MatchesDenseTrapezoid) {
  const Mollifier<2> m({0, 0}, 0.2);
  const KernelSpec<2> k{m, MultiIndex::zero()};
  const Vec<2> x{0.05, 0.0}, y{-0.4, 0.0};
  const Vec<2> g = kernel_eval(k, x, y);
  const Vec<2> o = kernel_trapezoid(m, x, y, 1000000);
  EXPECT_NEAR(g[0], o[0], 1e-7);
  EXPECT_NEAR(g[1], o[1], 1e-7);
  EXPECT_GT(std::abs(g[0]), 1e-3);
}

TEST(KernelEval, ReflectionSymmetry) {
  const Mollifier<2> m({0, 0}, 0.3);
  const KernelSpec<2> k{m, MultiIndex::zero()};
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  for (int t = 0; t < 20; ++t) {
    const Vec<2> x{u(rng), u(rng)}, y{u(rng), u(rng)};
    const Vec<2> g = kernel_eval(k, x, y);
    const Vec<2> r = kernel_eval(k, -1.0 * x, -1.0 * y);
    EXPECT_NEAR(g[0], -r[0], 1e-10);
    EXPECT_NEAR(g[1], -r[1], 1e-10);
  }
}

TEST(KernelEval, DerivativeIdentity) {
  // d_xj G + d_yj G - G~_j = 0.
  const Mollifier<2> m({0.1, 0.0}, 0.3);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-0.7, 0.7);
  int checked = 0;
  const double h = 1e-4;
  while (checked < 20) {
    const Vec<2> x{u(rng), u(rng)}, y{u(rng), u(rng)};
    if (norm<2>(x - y) < 0.1) continue;
    if (norm<2>(kernel_eval(KernelSpec<2>{m, {}}, x, y)) == 0.0) continue;
    for (int j = 0; j < 2; ++j) {
      Vec<2> e{};
      e[j] = h;
      const KernelSpec<2> k0{m, MultiIndex::zero()}, kj{m, MultiIndex::unit(j)};
      // Fourth-order central differences: kernel values reach O(10) at rho = 0.3.
      auto cd = [&](auto&& g) {
        return (1.0 / (12 * h)) * ((8.0 * g(1.0) - g(2.0)) - (8.0 * g(-1.0) - g(-2.0)));
      };
      const Vec<2> dx = cd([&](double s) { return kernel_eval(k0, x + s * e, y); });
      const Vec<2> dy = cd([&](double s) { return kernel_eval(k0, x, y + s * e); });
      const Vec<2> gt = kernel_eval(kj, x, y);
      for (int c = 0; c < 2; ++c) EXPECT_NEAR(dx[c] + dy[c] - gt[c], 0.0, 1e-5) << "j=" << j;
    }
    ++checked;
  }
}

TEST(Bogovskii, ZeroFieldGivesZero) {
  const auto d = StarDomain<2>::rectangle(1.0, 0.5);
  const auto B = make_bogovskii(d);
  const auto J = B.evaluate(zero_field(), {0.3, 0.1}, 2);
  for (int k = 0; k < 2; ++k) {
    EXPECT_EQ(J.u[k], 0.0);
    for (int j = 0; j < 2; ++j) {
      EXPECT_EQ(J.grad[k][j], 0.0);
      for (int l = 0; l < 2; ++l) EXPECT_EQ(J.hess[k][j][l], 0.0);
    }
  }
  const auto rep = B.residual_and_norms(zero_field(), d.quadrature(6), 2, 16);
  EXPECT_EQ(rep.seminorm1, 0.0);
  EXPECT_EQ(rep.seminorm2, 0.0);
  EXPECT_EQ(rep.boundary_max_u, 0.0);
}

TEST(Bogovskii, RejectsInvalidFields) {
  const auto d = StarDomain<2>::rectangle(1.0, 0.5);
  const auto B = make_bogovskii(d);
  auto f = x1_field();
  f.zero_mean = false;
  EXPECT_THROW(B.apply(f, {0, 0}), Error);
  f = x1_field();
  f.dim_out = 2;
  EXPECT_THROW(B.apply(f, {0, 0}), Error);
  f = x1_field();
  f.hessian = nullptr;
  EXPECT_NO_THROW(B.apply_grad(f, {0, 0}));
  EXPECT_THROW(B.apply_hess(f, {0, 0}), Error);
  f.gradient = nullptr;
  EXPECT_THROW(B.apply_grad(f, {0, 0}), Error);
}

TEST(Bogovskii, Linearity) {
  const auto d = StarDomain<2>::rectangle(1.0, 0.5);
  const auto q = d.quadrature(8);
  const auto set = candidate_set<2>("basic", d, q);
  const auto B = make_bogovskii(d);
  const auto h = combine(2.5, set[0], -0.7, set[2]);
  std::mt19937_64 rng(1);
  for (int t = 0; t < 5; ++t) {
    const Vec<2> x{std::uniform_real_distribution<double>(-1, 1)(rng),
                   std::uniform_real_distribution<double>(-0.5, 0.5)(rng)};
    const auto a = B.apply(set[0], x), b = B.apply(set[2], x), c = B.apply(h, x);
    const auto n = B.apply(set[0].scaled(-1.0), x);
    for (int k = 0; k < 2; ++k) {
      EXPECT_NEAR(c[k], 2.5 * a[k] - 0.7 * b[k], 1e-10);
      EXPECT_EQ(n[k], -a[k]);
    }
  }
}

TEST(Bogovskii, MatchesCartesianOracle) {
  const double a = 1.0, e = 0.5;
  const auto d = StarDomain<2>::rectangle(a, e);
  const auto B = make_bogovskii(d);
  const auto f = x1_field();
  const Vec<2> x{0.3, 0.1};
  const Vec<2> u = B.apply(f, x);
  const Vec<2> o = cartesian_oracle(B.mollifier(), a, e, f, x, 800, 400);
  EXPECT_NEAR(u[0], o[0], 1e-4);
  EXPECT_NEAR(u[1], o[1], 1e-4);
}

TEST(Bogovskii, GradientMatchesFiniteDifferences) {
  const auto d = StarDomain<2>::rectangle(1.0, 0.5);
  const auto q = d.quadrature(8);
  const auto B = make_bogovskii(d);
  const auto set = candidate_set<2>("basic", d, q);
  std::mt19937_64 rng(21);
  const double h = 1e-3;
  for (int t = 0; t < 10; ++t) {
    const Vec<2> x{std::uniform_real_distribution<double>(-0.95, 0.95)(rng),
                   std::uniform_real_distribution<double>(-0.45, 0.45)(rng)};
    const auto& f = set[t % set.size()];
    const Mat<2> G = B.apply_grad(f, x);
    for (int j = 0; j < 2; ++j) {
      auto at = [&](double s) {
        Vec<2> p = x;
        p[j] += s;
        return B.apply(f, p);
      };
      const auto p1 = at(h), m1 = at(-h), p2 = at(2 * h), m2 = at(-2 * h);
      for (int k = 0; k < 2; ++k) {
        const double fd = (-p2[k] + 8 * p1[k] - 8 * m1[k] + m2[k]) / (12 * h);
        EXPECT_NEAR(G[k][j], fd, 1e-4) << f.name << " x=(" << x[0] << "," << x[1] << ")";
      }
    }
  }
}

TEST(Bogovskii, HessianMatchesFiniteDifferences) {
  const auto d = StarDomain<2>::rectangle(1.0, 0.5);
  const auto q = d.quadrature(8);
  const auto B = make_bogovskii(d);
  const auto set = candidate_set<2>("basic", d, q);
  std::mt19937_64 rng(22);
  const double h = 1e-3;
  for (int t = 0; t < 10; ++t) {
    const Vec<2> x{std::uniform_real_distribution<double>(-0.95, 0.95)(rng),
                   std::uniform_real_distribution<double>(-0.45, 0.45)(rng)};
    const auto& f = set[t % set.size()];
    double asym = 0.0;
    const Tensor3<2> H = B.apply_hess(f, x, &asym);
    EXPECT_LE(asym, 1e-3);
    for (int l = 0; l < 2; ++l) {
      Vec<2> xp = x, xm = x;
      xp[l] += h;
      xm[l] -= h;
      const Mat<2> gp = B.apply_grad(f, xp), gm = B.apply_grad(f, xm);
      for (int k = 0; k < 2; ++k)
        for (int j = 0; j < 2; ++j) {
          EXPECT_EQ(H[k][j][l], H[k][l][j]);
          EXPECT_NEAR(H[k][j][l], (gp[k][j] - gm[k][j]) / (2 * h), 5e-3);
        }
    }
  }
}

TEST(Bogovskii, TraceEqualsF) {
  for (const auto& d : {StarDomain<2>::rectangle(1.0, 0.5), StarDomain<2>::ball(1.0)}) {
    const auto q = d.quadrature(8);
    const auto B = make_bogovskii(d);
    const auto set = candidate_set<2>("basic", d, q);
    std::mt19937_64 rng(9);
    int checked = 0;
    while (checked < 20) {
      const Vec<2> x{std::uniform_real_distribution<double>(-1, 1)(rng),
                     std::uniform_real_distribution<double>(-1, 1)(rng)};
      if (!d.contains(x)) continue;
      const auto& f = set[checked % set.size()];
      const Mat<2> G = B.apply_grad(f, x);
      const double fv = f.value(x);
      EXPECT_NEAR(G[0][0] + G[1][1], fv, 2e-3 * std::max(1.0, std::abs(fv)));
      ++checked;
    }
  }
}

TEST(Bogovskii, ResidualOnUnitSquare) {
  const auto d = StarDomain<2>::rectangle(1.0, 1.0);
  const auto q = d.quadrature(12);
  const auto f = zero_meaned(x1_field(), q);
  const auto B = make_bogovskii(d);
  const auto rep = B.residual_and_norms(f, q, 1, 0);
  EXPECT_LE(rep.div_residual_rel, 5e-3);
  EXPECT_GT(rep.seminorm1, 0.0);
}

TEST(Bogovskii, ThreeDimensionalTrace) {
  const auto d = StarDomain<3>::ball(1.0);
  const auto q = d.quadrature(6);
  auto f = coordinate_field<3>(0);
  f.zero_mean = true;
  const auto B = make_bogovskii(d);
  for (const Vec<3> x : {Vec<3>{0.2, 0.1, -0.3}, Vec<3>{-0.5, 0.4, 0.2}}) {
    const Mat<3> G = B.apply_grad(f, x);
    EXPECT_NEAR(G[0][0] + G[1][1] + G[2][2], f.value(x), 2e-3);
  }
}
