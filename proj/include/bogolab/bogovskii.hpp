#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <type_traits>
#include <vector>

#include "bogolab/core.hpp"
#include "bogolab/field.hpp"
#include "bogolab/mollifier.hpp"
#include "bogolab/parallel.hpp"
#include "bogolab/quadrature.hpp"
#include "bogolab/stardomain.hpp"

namespace bogolab {

/// Kernel selector: the bump itself (deriv = 0) or one of its derivatives.
template <int Dim>
struct KernelSpec {
  Mollifier<Dim> mollifier;
  MultiIndex deriv{};
};

namespace detail {

/// Parameter interval {s : |p + s q - c| <= rho}; returns false if empty.
template <int Dim>
bool ray_ball_interval(const Vec<Dim>& p, const Vec<Dim>& q, const Vec<Dim>& c, double rho, double& lo,
                       double& hi) {
  const Vec<Dim> w = p - c;
  const double qq = dot<Dim>(q, q);
  const double wq = dot<Dim>(w, q);
  const double disc = wq * wq - qq * (dot<Dim>(w, w) - rho * rho);
  if (disc <= 0.0 || qq == 0.0) return false;
  const double sq = std::sqrt(disc);
  lo = (-wq - sq) / qq;
  hi = (-wq + sq) / qq;
  return true;
}

}  // namespace detail

/// G(x,y) (or a derivative kernel) in the form
///   (x - y) * int_{max(1,s-)}^{s+} s^{n-1} d^alpha omega(y + s (x - y)) ds.
template <int Dim>
Vec<Dim> kernel_eval(const KernelSpec<Dim>& k, const std::type_identity_t<Vec<Dim>>& x,
                     const std::type_identity_t<Vec<Dim>>& y, int points = 64) {
  if (k.deriv.total() > 2) throw Error("kernel_eval: kernel derivative order above 2");
  const Vec<Dim> d = x - y;
  if (dot<Dim>(d, d) == 0.0) throw Error("kernel_eval: coincident points");
  Vec<Dim> out{};
  double lo = 0.0, hi = 0.0;
  if (!detail::ray_ball_interval<Dim>(y, d, k.mollifier.center(), k.mollifier.rho(), lo, hi)) return out;
  lo = std::max(lo, 1.0);
  if (!(hi > lo)) return out;
  const Rule1D r = composite_gauss(lo, hi, 2, points / 2);
  double acc = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double s = r.nodes[i];
    acc += r.weights[i] * std::pow(s, Dim - 1) * k.mollifier.eval_deriv(k.deriv, y + s * d);
  }
  return acc * d;
}

/// Quadrature resolution of the polar evaluation around x.
struct BogovskiiOptions {
  int angular_points = 24;  // Gauss points per angular panel
  int angular_panels = 4;   // minimum panels across the cone of directions
  int azimuth_points = 32;  // 3D only: trapezoid points around the cone axis
  int tau_points = 40;      // Gauss points per half of the chord through the ball (omega is flat at its edge)
  int radial_points = 20;   // Gauss points on [0, exit distance]
  bool boundary_terms = true;
};

/// u(x), grad u(x) (grad[k][j] = d_j u_k), and Hessian hess[k][j][l].
template <int Dim>
struct BogovskiiJet {
  Vec<Dim> u{};
  Mat<Dim> grad{};
  Tensor3<Dim> hess{};
  double hess_asymmetry = 0.0;  // max |H_kjl - H_klj| before symmetrization
};

/// Measurements of u = B f over a quadrature rule.
struct ResidualReport {
  double div_residual_rel = 0.0;
  double boundary_max_u = 0.0;
  double boundary_max_gradu = 0.0;
  double interior_max_u = 0.0;
  double interior_max_gradu = 0.0;
  double seminorm1 = 0.0;
  double seminorm2 = 0.0;
  double f_norm0 = 0.0;
  double f_seminorm1 = 0.0;
  double max_hess_asymmetry = 0.0;
};

/// The right inverse of the divergence on a domain star-shaped with respect to B_rho.
///
/// With y = x - r theta the kernel integral becomes
///   u(x) = int_S theta sum_k C(n-1,k) M_k(x,theta) F_{n-1-k}(x,theta) dtheta,
///   M_k = int_0^inf tau^k omega(x + tau theta) dtau,  F_m = int_0^{L(x,theta)} f(x - r theta) r^m dr,
/// where L is the exit distance along -theta. Derivatives are taken under the integral;
/// the moving upper limit L contributes boundary terms, which vanish when f = 0 on the boundary.
template <int Dim>
class Bogovskii {
 public:
  Bogovskii(Mollifier<Dim> m, StarDomain<Dim> d, BogovskiiOptions opt = {})
      : m_(std::move(m)), d_(std::move(d)), opt_(opt) {}

  const Mollifier<Dim>& mollifier() const { return m_; }
  const StarDomain<Dim>& domain() const { return d_; }
  const BogovskiiOptions& options() const { return opt_; }

  BogovskiiJet<Dim> evaluate(const FieldSpec<Dim>& f, const Vec<Dim>& x, int order) const {
    check_field(f, order);
    BogovskiiJet<Dim> out;
    for_each_direction(x, [&](const Vec<Dim>& theta, double w) { accumulate(f, x, theta, w, order, out); });
    if (order >= 2 && opt_.boundary_terms) corner_jumps(f, x, out);
    if (order >= 2) {
      for (int k = 0; k < Dim; ++k)
        for (int j = 0; j < Dim; ++j)
          for (int l = j + 1; l < Dim; ++l) {
            const double a = out.hess[k][j][l], b = out.hess[k][l][j];
            out.hess_asymmetry = std::max(out.hess_asymmetry, std::abs(a - b));
            out.hess[k][j][l] = out.hess[k][l][j] = 0.5 * (a + b);
          }
    }
    return out;
  }

  Vec<Dim> apply(const FieldSpec<Dim>& f, const Vec<Dim>& x) const { return evaluate(f, x, 0).u; }
  Mat<Dim> apply_grad(const FieldSpec<Dim>& f, const Vec<Dim>& x) const { return evaluate(f, x, 1).grad; }
  Tensor3<Dim> apply_hess(const FieldSpec<Dim>& f, const Vec<Dim>& x, double* asymmetry = nullptr) const {
    const auto j = evaluate(f, x, 2);
    if (asymmetry) *asymmetry = j.hess_asymmetry;
    return j.hess;
  }

  /// Evaluates the jet at every node (in parallel, fixed output slots).
  std::vector<BogovskiiJet<Dim>> evaluate_many(const FieldSpec<Dim>& f, const std::vector<Vec<Dim>>& xs,
                                               int order) const {
    std::vector<BogovskiiJet<Dim>> out(xs.size());
    parallel_for(xs.size(), [&](std::size_t i) { out[i] = evaluate(f, xs[i], order); });
    return out;
  }

  /// Divergence residual, boundary decay and seminorms; order 2 also fills seminorm2.
  ResidualReport residual_and_norms(const FieldSpec<Dim>& f, const QuadratureRule<Dim>& q, int order = 2,
                                    int boundary_count = 128) const {
    ResidualReport rep;
    const auto jets = evaluate_many(f, q.nodes, order);
    double res2 = 0.0, f2 = 0.0, g2 = 0.0, s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      const auto& J = jets[i];
      const double w = q.weights[i];
      const double fv = f.value(q.nodes[i]);
      double tr = 0.0, gradf = 0.0, gu = 0.0;
      for (int k = 0; k < Dim; ++k) tr += J.grad[k][k];
      res2 += w * (tr - fv) * (tr - fv);
      f2 += w * fv * fv;
      if (f.gradient) {
        const Vec<Dim> g = f.gradient(q.nodes[i]);
        gradf = dot<Dim>(g, g);
        g2 += w * gradf;
      }
      for (int k = 0; k < Dim; ++k)
        for (int j = 0; j < Dim; ++j) {
          gu += J.grad[k][j] * J.grad[k][j];
          for (int l = 0; l < Dim; ++l) s2 += w * J.hess[k][j][l] * J.hess[k][j][l];
        }
      s1 += w * gu;
      rep.interior_max_u = std::max(rep.interior_max_u, norm<Dim>(J.u));
      rep.interior_max_gradu = std::max(rep.interior_max_gradu, std::sqrt(gu));
      rep.max_hess_asymmetry = std::max(rep.max_hess_asymmetry, J.hess_asymmetry);
    }
    rep.f_norm0 = std::sqrt(f2);
    rep.f_seminorm1 = std::sqrt(g2);
    rep.div_residual_rel = f2 > 0.0 ? std::sqrt(res2 / f2) : std::sqrt(res2);
    rep.seminorm1 = std::sqrt(s1);
    rep.seminorm2 = std::sqrt(s2);
    if (boundary_count > 0) {
      const auto pts = d_.boundary_samples(boundary_count, 1e-3 * d_.star_radius());
      const auto bj = evaluate_many(f, pts, std::min(order, 1));
      for (const auto& J : bj) {
        double gu = 0.0;
        for (int k = 0; k < Dim; ++k)
          for (int j = 0; j < Dim; ++j) gu += J.grad[k][j] * J.grad[k][j];
        rep.boundary_max_u = std::max(rep.boundary_max_u, norm<Dim>(J.u));
        rep.boundary_max_gradu = std::max(rep.boundary_max_gradu, std::sqrt(gu));
      }
    }
    return rep;
  }

 private:
  void check_field(const FieldSpec<Dim>& f, int order) const {
    if (f.dim_out != 1) throw Error("bogovskii: f must be scalar");
    if (!f.zero_mean) throw Error("bogovskii: f must be flagged zero-mean");
    if (!f.value) throw Error("bogovskii: f has no value callback");
    if (order >= 1 && !f.gradient) throw Error("bogovskii: derivative of u needs the gradient of f");
    if (order >= 2 && !f.hessian) throw Error("bogovskii: second derivative of u needs the Hessian of f");
  }

  /// Calls fn(theta, weight) over directions theta for which the ray x + tau theta meets B_rho.
  template <typename Fn>
  void for_each_direction(const Vec<Dim>& x, Fn&& fn) const {
    const Vec<Dim> toc = m_.center() - x;
    const double dist = norm<Dim>(toc);
    const double rho = m_.rho();
    const bool inside = dist <= rho;
    const double half = inside ? std::numbers::pi : std::asin(rho / dist);
    if constexpr (Dim == 2) {
      const double phi0 = inside ? 0.0 : std::atan2(toc[1], toc[0]);
      const double a = phi0 - half, b = phi0 + half;
      std::vector<double> breaks{a, b};
      for (const auto& kd : d_.kink_directions(x)) {
        // Kinks of L(x, theta) occur when -theta points at a corner.
        double t = std::atan2(-kd[1], -kd[0]);
        while (t < a) t += 2.0 * std::numbers::pi;
        while (t >= a + 2.0 * std::numbers::pi) t -= 2.0 * std::numbers::pi;
        if (t > a && t < b) breaks.push_back(t);
      }
      std::sort(breaks.begin(), breaks.end());
      const Rule1D r = piecewise_gauss(breaks, opt_.angular_points, (b - a) / opt_.angular_panels);
      for (std::size_t i = 0; i < r.size(); ++i)
        fn(Vec<2>{std::cos(r.nodes[i]), std::sin(r.nodes[i])}, r.weights[i]);
    } else {
      // Cone about the axis toward the centre; polar angle psi in [0, half].
      Vec<3> axis = inside ? Vec<3>{0.0, 0.0, 1.0} : (1.0 / dist) * toc;
      Vec<3> e1 = std::abs(axis[0]) < 0.9 ? Vec<3>{1.0, 0.0, 0.0} : Vec<3>{0.0, 1.0, 0.0};
      e1 = e1 - dot<3>(e1, axis) * axis;
      e1 = (1.0 / norm<3>(e1)) * e1;
      const Vec<3> e2{axis[1] * e1[2] - axis[2] * e1[1], axis[2] * e1[0] - axis[0] * e1[2],
                      axis[0] * e1[1] - axis[1] * e1[0]};
      const Rule1D psi = composite_gauss(0.0, half, opt_.angular_panels, opt_.angular_points);
      const Rule1D chi = periodic_trapezoid(opt_.azimuth_points);
      for (std::size_t p = 0; p < psi.size(); ++p) {
        const double sp = std::sin(psi.nodes[p]), cp = std::cos(psi.nodes[p]);
        for (std::size_t c = 0; c < chi.size(); ++c) {
          const double cc = std::cos(chi.nodes[c]), sc = std::sin(chi.nodes[c]);
          const Vec<3> th = cp * axis + (sp * cc) * e1 + (sp * sc) * e2;
          fn(th, psi.weights[p] * chi.weights[c] * sp);
        }
      }
    }
  }

  /// d L / d x jumps across directions that point at a corner, and those directions move
  /// with x: the second derivative picks up [integrand] * d(corner angle)/dx per corner.
  void corner_jumps(const FieldSpec<Dim>& f, const Vec<Dim>& x, BogovskiiJet<Dim>& out) const {
    if constexpr (Dim == 2) {
      if (d_.kind() != DomainKind::rectangle && d_.kind() != DomainKind::polar) return;
      constexpr double kSide = 1e-9;
      for (const auto& kd : d_.kink_directions(x)) {
        const Vec<2> theta = -1.0 * kd;
        double t0 = 0.0, t1 = 0.0;
        if (!detail::ray_ball_interval<2>(x, theta, m_.center(), m_.rho(), t0, t1)) continue;
        t0 = std::max(t0, 0.0);
        if (!(t1 > t0)) continue;
        std::array<double, 2> M{};
        const Rule1D tr = composite_gauss(t0, t1, 2, opt_.tau_points);
        for (std::size_t i = 0; i < tr.size(); ++i) {
          const double v = tr.weights[i] * m_.eval(x + tr.nodes[i] * theta);
          M[0] += v;
          M[1] += v * tr.nodes[i];
        }
        const double phi = std::atan2(theta[1], theta[0]);
        auto side_grad = [&](double dphi) {
          const Vec<2> th{std::cos(phi + dphi), std::sin(phi + dphi)};
          return d_.exit(x, -1.0 * th);
        };
        const RayExit<2> lo = side_grad(-kSide), hi = side_grad(kSide);
        const double L = 0.5 * (lo.distance + hi.distance);
        const double fc = f.value(x - L * theta);
        // (r + tau): k = 0 pairs with m = 1, k = 1 with m = 0.
        const double w = M[0] * fc * L + M[1] * fc;
        const Vec<2> dphi{-theta[1] / L, theta[0] / L};
        for (int k = 0; k < 2; ++k)
          for (int j = 0; j < 2; ++j) {
            const double jump = theta[k] * w * (lo.grad[j] - hi.grad[j]);
            for (int l = 0; l < 2; ++l) out.hess[k][j][l] += jump * dphi[l];
          }
      }
    }
  }

  void accumulate(const FieldSpec<Dim>& f, const Vec<Dim>& x, const Vec<Dim>& theta, double w, int order,
                  BogovskiiJet<Dim>& out) const {
    double t0 = 0.0, t1 = 0.0;
    if (!detail::ray_ball_interval<Dim>(x, theta, m_.center(), m_.rho(), t0, t1)) return;
    t0 = std::max(t0, 0.0);
    if (!(t1 > t0)) return;

    // Moments of omega along the forward ray.
    std::array<double, Dim> M{};
    std::array<Vec<Dim>, Dim> dM{};
    std::array<Mat<Dim>, Dim> d2M{};
    const Rule1D tr = composite_gauss(t0, t1, 2, opt_.tau_points);
    for (std::size_t i = 0; i < tr.size(); ++i) {
      const double tau = tr.nodes[i];
      const Vec<Dim> p = x + tau * theta;
      double tk = tr.weights[i];
      if (order == 0) {
        const double v = m_.eval(p);
        for (int k = 0; k < Dim; ++k, tk *= tau) M[k] += tk * v;
        continue;
      }
      const Jet2<Dim> J = m_.jet(p);
      for (int k = 0; k < Dim; ++k, tk *= tau) {
        M[k] += tk * J.value;
        for (int j = 0; j < Dim; ++j) {
          dM[k][j] += tk * J.grad[j];
          if (order >= 2)
            for (int l = 0; l < Dim; ++l) d2M[k][j][l] += tk * J.hess[j][l];
        }
      }
    }

    // Radial integrals of f along the backward ray, up to the boundary.
    const Vec<Dim> back = -1.0 * theta;
    const RayExit<Dim> ex = d_.exit(x, back);
    const double L = ex.distance;
    std::array<double, Dim> F{};
    std::array<Vec<Dim>, Dim> dF{};
    std::array<Mat<Dim>, Dim> d2F{};
    if (L > 0.0) {
      const Rule1D rr = gauss_on(0.0, L, opt_.radial_points);
      for (std::size_t i = 0; i < rr.size(); ++i) {
        const double r = rr.nodes[i];
        const Vec<Dim> y = x - r * theta;
        const double fv = f.value(y);
        Vec<Dim> g{};
        Mat<Dim> h{};
        if (order >= 1) g = f.gradient(y);
        if (order >= 2) h = f.hessian(y);
        double rm = rr.weights[i];
        for (int m = 0; m < Dim; ++m, rm *= r) {
          F[m] += rm * fv;
          for (int j = 0; j < Dim; ++j) {
            if (order >= 1) dF[m][j] += rm * g[j];
            if (order >= 2)
              for (int l = 0; l < Dim; ++l) d2F[m][j][l] += rm * h[j][l];
          }
        }
      }
      if (order >= 1 && opt_.boundary_terms) {
        const Vec<Dim> yb = x - L * theta;
        const double fb = f.value(yb);
        Vec<Dim> gb{};
        if (order >= 2) gb = f.gradient(yb);
        const Vec<Dim>& dL = ex.grad;
        double Lm = 1.0;
        for (int m = 0; m < Dim; ++m, Lm *= L) {
          const double Lm1 = m == 0 ? 0.0 : m * std::pow(L, m - 1);
          for (int j = 0; j < Dim; ++j) {
            dF[m][j] += fb * Lm * dL[j];
            if (order < 2) continue;
            for (int l = 0; l < Dim; ++l) {
              // d/dx_l of f(y_b) L^m dL_j, with d y_b / d x_l = e_l - dL_l theta.
              const double dfb = gb[l] - dL[l] * dot<Dim>(gb, theta);
              d2F[m][j][l] += gb[j] * Lm * dL[l];  // from the inner integral's moving limit
              d2F[m][j][l] += dL[j] * (dfb * Lm + fb * Lm1 * dL[l]) + fb * Lm * ex.hess[j][l];
            }
          }
        }
      }
    }

    // Combine with binomial weights of (r + tau)^{n-1}.
    constexpr int binom[3][3] = {{1, 0, 0}, {1, 1, 0}, {1, 2, 1}};
    double S0 = 0.0;
    Vec<Dim> S1{};
    Mat<Dim> S2{};
    for (int k = 0; k < Dim; ++k) {
      const int m = Dim - 1 - k;
      const double c = binom[Dim - 1][k];
      S0 += c * M[k] * F[m];
      if (order < 1) continue;
      for (int j = 0; j < Dim; ++j) {
        S1[j] += c * (dM[k][j] * F[m] + M[k] * dF[m][j]);
        if (order < 2) continue;
        for (int l = 0; l < Dim; ++l)
          S2[j][l] += c * (d2M[k][j][l] * F[m] + dM[k][j] * dF[m][l] + dM[k][l] * dF[m][j] + M[k] * d2F[m][j][l]);
      }
    }
    for (int k = 0; k < Dim; ++k) {
      const double wt = w * theta[k];
      out.u[k] += wt * S0;
      if (order < 1) continue;
      for (int j = 0; j < Dim; ++j) {
        out.grad[k][j] += wt * S1[j];
        if (order < 2) continue;
        for (int l = 0; l < Dim; ++l) out.hess[k][j][l] += wt * S2[j][l];
      }
    }
  }

  Mollifier<Dim> m_;
  StarDomain<Dim> d_;
  BogovskiiOptions opt_;
};

/// Operator built on the domain's own star ball.
template <int Dim>
Bogovskii<Dim> make_bogovskii(const StarDomain<Dim>& d, BogovskiiOptions opt = {}) {
  return Bogovskii<Dim>(Mollifier<Dim>(d.star_center(), d.star_radius()), d, opt);
}

template <int Dim>
Vec<Dim> apply(const Mollifier<Dim>& m, const StarDomain<Dim>& d, const FieldSpec<Dim>& f,
               const std::type_identity_t<Vec<Dim>>& x) {
  return Bogovskii<Dim>(m, d).apply(f, x);
}

template <int Dim>
Mat<Dim> apply_grad(const Mollifier<Dim>& m, const StarDomain<Dim>& d, const FieldSpec<Dim>& f,
                    const std::type_identity_t<Vec<Dim>>& x) {
  return Bogovskii<Dim>(m, d).apply_grad(f, x);
}

template <int Dim>
Tensor3<Dim> apply_hess(const Mollifier<Dim>& m, const StarDomain<Dim>& d, const FieldSpec<Dim>& f,
                        const std::type_identity_t<Vec<Dim>>& x, double* asymmetry = nullptr) {
  return Bogovskii<Dim>(m, d).apply_hess(f, x, asymmetry);
}

}  // namespace bogolab
