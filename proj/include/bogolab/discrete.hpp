#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bogolab/core.hpp"
#include "bogolab/stardomain.hpp"

namespace bogolab {

/// Nodal field on a uniform tensor grid covering a rectangle/box, boundary nodes included.
/// Storage: node index row-major (last axis fastest), components interleaved.
template <int Dim>
struct GridField {
  Vec<Dim> lo{};
  Vec<Dim> h{};
  std::array<int, Dim> shape{};  // nodes per axis (cells + 1)
  int components = 1;
  std::vector<double> values;

  std::size_t nodes() const {
    std::size_t n = 1;
    for (int s : shape) n *= static_cast<std::size_t>(s);
    return n;
  }
  std::size_t stride(int axis) const {
    std::size_t s = 1;
    for (int k = Dim - 1; k > axis; --k) s *= static_cast<std::size_t>(shape[k]);
    return s;
  }
  std::array<int, Dim> multi(std::size_t n) const {
    std::array<int, Dim> i{};
    for (int k = Dim - 1; k >= 0; --k) {
      i[k] = static_cast<int>(n % shape[k]);
      n /= shape[k];
    }
    return i;
  }
  std::size_t linear(const std::array<int, Dim>& i) const {
    std::size_t n = 0;
    for (int k = 0; k < Dim; ++k) n = n * shape[k] + i[k];
    return n;
  }
  Vec<Dim> point(std::size_t n) const {
    const auto i = multi(n);
    Vec<Dim> x{};
    for (int k = 0; k < Dim; ++k) x[k] = lo[k] + i[k] * h[k];
    return x;
  }
  bool on_boundary(std::size_t n) const {
    const auto i = multi(n);
    for (int k = 0; k < Dim; ++k)
      if (i[k] == 0 || i[k] == shape[k] - 1) return true;
    return false;
  }
  /// Trapezoid weight of node n.
  double weight(std::size_t n) const {
    const auto i = multi(n);
    double w = 1.0;
    for (int k = 0; k < Dim; ++k) w *= (i[k] == 0 || i[k] == shape[k] - 1) ? 0.5 * h[k] : h[k];
    return w;
  }
  double cell_volume() const {
    double v = 1.0;
    for (double s : h) v *= s;
    return v;
  }
  double& at(std::size_t n, int c = 0) { return values[n * components + c]; }
  double at(std::size_t n, int c = 0) const { return values[n * components + c]; }

  GridField like(int comps) const {
    GridField g;
    g.lo = lo;
    g.h = h;
    g.shape = shape;
    g.components = comps;
    g.values.assign(nodes() * comps, 0.0);
    return g;
  }
  /// Single component c as a scalar field.
  GridField component(int c) const {
    GridField g = like(1);
    for (std::size_t n = 0; n < nodes(); ++n) g.values[n] = at(n, c);
    return g;
  }
};

/// Grid on a rectangle/box with spacing close to h on every axis.
template <int Dim>
GridField<Dim> make_grid(const StarDomain<Dim>& d, double h, int components = 1) {
  if (d.kind() != DomainKind::rectangle && d.kind() != DomainKind::box)
    throw Error("grid fields require a rectangle or box domain");
  if (!(h > 0.0)) throw Error("grid spacing must be positive");
  const auto [lo, hi] = d.bounding_box();
  GridField<Dim> g;
  g.lo = lo;
  g.components = components;
  for (int k = 0; k < Dim; ++k) {
    const int cells = std::max(2, static_cast<int>(std::lround((hi[k] - lo[k]) / h)));
    g.shape[k] = cells + 1;
    g.h[k] = (hi[k] - lo[k]) / cells;
  }
  g.values.assign(g.nodes() * components, 0.0);
  return g;
}

/// Samples fn (returning `components` values through the output pointer) at every node.
template <int Dim>
GridField<Dim> sample_grid(const StarDomain<Dim>& d, double h, int components,
                           const std::function<void(const Vec<Dim>&, double*)>& fn) {
  GridField<Dim> g = make_grid(d, h, components);
  for (std::size_t n = 0; n < g.nodes(); ++n) fn(g.point(n), &g.values[n * components]);
  return g;
}

template <int Dim>
GridField<Dim> sample_scalar(const StarDomain<Dim>& d, double h, const std::function<double(const Vec<Dim>&)>& f) {
  return sample_grid<Dim>(d, h, 1, [&](const Vec<Dim>& x, double* out) { out[0] = f(x); });
}

/// Trapezoid L2 norm over all components.
template <int Dim>
double l2_norm(const GridField<Dim>& g) {
  double s = 0.0;
  for (std::size_t n = 0; n < g.nodes(); ++n) {
    const double w = g.weight(n);
    for (int c = 0; c < g.components; ++c) s += w * g.at(n, c) * g.at(n, c);
  }
  return std::sqrt(s);
}

/// Convergence certificate of an iterative solve.
struct SolveReport {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

namespace detail {

/// Preconditioned CG for an SPD operator on vectors of size n; entries with mask 0 stay fixed at 0.
template <typename Apply>
SolveReport pcg(Apply&& apply, const std::vector<double>& b, std::vector<double>& x, const std::vector<double>& diag,
                double tol, int max_iter) {
  const std::size_t n = b.size();
  std::vector<double> r(n), z(n), p(n), ap(n);
  apply(x, ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
  const double bn = std::sqrt(std::inner_product(b.begin(), b.end(), b.begin(), 0.0));
  SolveReport rep;
  if (bn == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    rep.converged = true;
    return rep;
  }
  for (std::size_t i = 0; i < n; ++i) z[i] = diag[i] > 0.0 ? r[i] / diag[i] : 0.0;
  p = z;
  double rz = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
  for (int it = 1; it <= max_iter; ++it) {
    apply(p, ap);
    const double alpha = rz / std::inner_product(p.begin(), p.end(), ap.begin(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    const double rn = std::sqrt(std::inner_product(r.begin(), r.end(), r.begin(), 0.0));
    rep.iterations = it;
    rep.relative_residual = rn / bn;
    if (rep.relative_residual <= tol) {
      rep.converged = true;
      return rep;
    }
    for (std::size_t i = 0; i < n; ++i) z[i] = diag[i] > 0.0 ? r[i] / diag[i] : 0.0;
    const double rz_new = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  return rep;
}

/// -Laplacian (2 Dim + 1 point) on interior nodes; boundary entries of x ignored, of y zero.
template <int Dim>
void apply_neg_laplacian(const GridField<Dim>& geo, const std::vector<double>& x, std::vector<double>& y) {
  const std::size_t nn = geo.nodes();
  y.assign(nn, 0.0);
  for (std::size_t n = 0; n < nn; ++n) {
    if (geo.on_boundary(n)) continue;
    double s = 0.0;
    for (int k = 0; k < Dim; ++k) {
      const std::size_t st = geo.stride(k);
      const double inv = 1.0 / (geo.h[k] * geo.h[k]);
      const double l = geo.on_boundary(n - st) ? 0.0 : x[n - st];
      const double r = geo.on_boundary(n + st) ? 0.0 : x[n + st];
      s += inv * (2.0 * x[n] - l - r);
    }
    y[n] = s;
  }
}

/// Gradient of the discrete Hessian energy
///   E(w) = sum_nodes c_n sum_k (D_kk w)^2 + 2 sum_{k<l} sum_cells c_cell (D_kl w)^2,
/// with w = 0 on the boundary and even reflection across it (clamped plate). In the interior
/// this is the 13-point (2D) biharmonic stencil times the cell volume.
template <int Dim>
void apply_hessian_energy(const GridField<Dim>& geo, const std::vector<double>& xin, std::vector<double>& y,
                          double* energy = nullptr) {
  const std::size_t nn = geo.nodes();
  std::vector<double> x(xin);
  for (std::size_t n = 0; n < nn; ++n)
    if (geo.on_boundary(n)) x[n] = 0.0;
  y.assign(nn, 0.0);
  double e = 0.0;
  // Pure second differences at every node; ghost w_{-1} = w_{1}.
  for (int k = 0; k < Dim; ++k) {
    const std::size_t st = geo.stride(k);
    const double inv = 1.0 / (geo.h[k] * geo.h[k]);
    for (std::size_t n = 0; n < nn; ++n) {
      const auto i = geo.multi(n);
      const int last = geo.shape[k] - 1;
      const std::size_t lm = i[k] == 0 ? n + st : n - st;
      const std::size_t lp = i[k] == last ? n - st : n + st;
      const double d = inv * (x[lm] - 2.0 * x[n] + x[lp]);
      const double c = geo.weight(n);
      e += c * d * d;
      const double g = 2.0 * c * d * inv;
      y[lm] += g;
      y[n] -= 2.0 * g;
      y[lp] += g;
    }
  }
  // Mixed differences at cell centers of each (k, l) plane, trapezoid in the remaining axis.
  for (int k = 0; k < Dim; ++k)
    for (int l = k + 1; l < Dim; ++l) {
      const std::size_t sk = geo.stride(k), sl = geo.stride(l);
      const double inv = 1.0 / (geo.h[k] * geo.h[l]);
      for (std::size_t n = 0; n < nn; ++n) {
        const auto i = geo.multi(n);
        if (i[k] == geo.shape[k] - 1 || i[l] == geo.shape[l] - 1) continue;
        double c = geo.h[k] * geo.h[l];
        for (int m = 0; m < Dim; ++m)
          if (m != k && m != l) c *= (i[m] == 0 || i[m] == geo.shape[m] - 1) ? 0.5 * geo.h[m] : geo.h[m];
        const double d = inv * (x[n + sk + sl] - x[n + sk] - x[n + sl] + x[n]);
        e += 2.0 * c * d * d;
        const double g = 4.0 * c * d * inv;
        y[n + sk + sl] += g;
        y[n + sk] -= g;
        y[n + sl] -= g;
        y[n] += g;
      }
    }
  // Energy gradient is 2 K x; return K x.
  for (std::size_t n = 0; n < nn; ++n) y[n] = geo.on_boundary(n) ? 0.0 : 0.5 * y[n];
  if (energy) *energy = e;
}

template <int Dim, typename Apply>
std::vector<double> probe_diagonal(const GridField<Dim>& geo, int period, Apply&& apply) {
  const std::size_t nn = geo.nodes();
  std::vector<double> diag(nn, 0.0), e(nn), y;
  int colors = 1;
  for (int k = 0; k < Dim; ++k) colors *= period;
  for (int col = 0; col < colors; ++col) {
    std::fill(e.begin(), e.end(), 0.0);
    for (std::size_t n = 0; n < nn; ++n) {
      const auto i = geo.multi(n);
      int c = 0;
      for (int k = 0; k < Dim; ++k) c = c * period + i[k] % period;
      if (c == col && !geo.on_boundary(n)) e[n] = 1.0;
    }
    apply(e, y);
    for (std::size_t n = 0; n < nn; ++n)
      if (e[n] == 1.0) diag[n] = y[n];
  }
  return diag;
}

}  // namespace detail

template <int Dim>
struct GridSolve {
  GridField<Dim> w;
  std::vector<SolveReport> reports;  // one per component
};

/// -Laplace w = g, w = 0 on the boundary, per component; CG to relative residual `tol`.
template <int Dim>
GridSolve<Dim> poisson_solve(const GridField<Dim>& g, double tol = 1e-10, int max_iter = 100000) {
  GridSolve<Dim> out{g.like(g.components), {}};
  const std::size_t nn = g.nodes();
  std::vector<double> diag(nn, 0.0);
  for (std::size_t n = 0; n < nn; ++n)
    if (!g.on_boundary(n))
      for (int k = 0; k < Dim; ++k) diag[n] += 2.0 / (g.h[k] * g.h[k]);
  for (int c = 0; c < g.components; ++c) {
    std::vector<double> b(nn, 0.0), x(nn, 0.0);
    for (std::size_t n = 0; n < nn; ++n)
      if (!g.on_boundary(n)) b[n] = g.at(n, c);
    const auto rep = detail::pcg(
        [&](const std::vector<double>& v, std::vector<double>& y) { detail::apply_neg_laplacian(g, v, y); }, b, x,
        diag, tol, max_iter);
    if (!rep.converged) throw Error("poisson_solve: CG did not converge");
    for (std::size_t n = 0; n < nn; ++n) out.w.at(n, c) = x[n];
    out.reports.push_back(rep);
  }
  return out;
}

/// Clamped biharmonic Delta^2 w = g (w = dw/dn = 0), per component; diagonal-PCG.
template <int Dim>
GridSolve<Dim> biharmonic_solve(const GridField<Dim>& g, double tol = 1e-9, int max_iter = 200000) {
  GridSolve<Dim> out{g.like(g.components), {}};
  const std::size_t nn = g.nodes();
  auto apply = [&](const std::vector<double>& v, std::vector<double>& y) { detail::apply_hessian_energy(g, v, y); };
  const std::vector<double> diag = detail::probe_diagonal(g, 5, apply);
  for (int c = 0; c < g.components; ++c) {
    std::vector<double> b(nn, 0.0), x(nn, 0.0);
    for (std::size_t n = 0; n < nn; ++n)
      if (!g.on_boundary(n)) b[n] = g.weight(n) * g.at(n, c);
    const auto rep = detail::pcg(apply, b, x, diag, tol, max_iter);
    if (!rep.converged) throw Error("biharmonic_solve: PCG did not converge");
    for (std::size_t n = 0; n < nn; ++n) out.w.at(n, c) = x[n];
    out.reports.push_back(rep);
  }
  return out;
}

/// |w|_1 by forward differences over grid edges (sum over components).
template <int Dim>
double h1_seminorm(const GridField<Dim>& w) {
  double s = 0.0;
  for (int c = 0; c < w.components; ++c)
    for (int k = 0; k < Dim; ++k) {
      const std::size_t st = w.stride(k);
      for (std::size_t n = 0; n < w.nodes(); ++n) {
        const auto i = w.multi(n);
        if (i[k] == w.shape[k] - 1) continue;
        double cw = w.h[k];
        for (int m = 0; m < Dim; ++m)
          if (m != k) cw *= (i[m] == 0 || i[m] == w.shape[m] - 1) ? 0.5 * w.h[m] : w.h[m];
        const double d = (w.at(n + st, c) - w.at(n, c)) / w.h[k];
        s += cw * d * d;
      }
    }
  return std::sqrt(s);
}

/// |w|_2 with the full discrete Hessian (mixed terms included), summed over components.
template <int Dim>
double h2_seminorm(const GridField<Dim>& w) {
  double s = 0.0;
  std::vector<double> x(w.nodes()), y;
  for (int c = 0; c < w.components; ++c) {
    for (std::size_t n = 0; n < w.nodes(); ++n) x[n] = w.at(n, c);
    double e = 0.0;
    detail::apply_hessian_energy(w, x, y, &e);
    s += e;
  }
  return std::sqrt(s);
}

/// Negative norms through the Riesz representer: ||g||_{-1} = |w|_1 with -Laplace w = g,
/// ||g||_{-2} = |w|_2 with Delta^2 w = g; vector/tensor fields componentwise.
struct NegNorm {
  double value = 0.0;
  std::vector<SolveReport> reports;
};

template <int Dim>
NegNorm neg_norm_h1(const GridField<Dim>& g, double tol = 1e-10) {
  auto s = poisson_solve(g, tol);
  return {h1_seminorm(s.w), s.reports};
}

template <int Dim>
NegNorm neg_norm_h2(const GridField<Dim>& g, double tol = 1e-9) {
  auto s = biharmonic_solve(g, tol);
  return {h2_seminorm(s.w), s.reports};
}

struct PoincareResult {
  double lambda1 = 0.0;
  double constant = 0.0;  // C_P = 1 / (R sqrt(lambda1))
  int iterations = 0;
};

/// C_P from the smallest discrete Dirichlet eigenvalue, by inverse iteration.
template <int Dim>
PoincareResult poincare_constant(const StarDomain<Dim>& d, double h, int max_iter = 500) {
  GridField<Dim> v = make_grid(d, h, 1);
  const std::size_t nn = v.nodes();
  for (std::size_t n = 0; n < nn; ++n) {
    if (v.on_boundary(n)) continue;
    // Positive start (product of sines) is not orthogonal to the first mode.
    const auto i = v.multi(n);
    double p = 1.0;
    for (int k = 0; k < Dim; ++k) p *= std::sin(std::numbers::pi * i[k] / (v.shape[k] - 1));
    v.values[n] = p;
  }
  PoincareResult out;
  double lambda = 0.0;
  std::vector<double> av;
  for (int it = 1; it <= max_iter; ++it) {
    double nv = std::sqrt(std::inner_product(v.values.begin(), v.values.end(), v.values.begin(), 0.0));
    for (double& x : v.values) x /= nv;
    GridField<Dim> next = poisson_solve(v, 1e-12).w;
    detail::apply_neg_laplacian(next, next.values, av);
    const double num = std::inner_product(next.values.begin(), next.values.end(), av.begin(), 0.0);
    const double den = std::inner_product(next.values.begin(), next.values.end(), next.values.begin(), 0.0);
    const double lam = num / den;
    out.iterations = it;
    v = std::move(next);
    if (it > 1 && std::abs(lam - lambda) <= 1e-11 * lam) {
      lambda = lam;
      out.lambda1 = lambda;
      out.constant = 1.0 / (d.diameter() * std::sqrt(lambda));
      return out;
    }
    lambda = lam;
  }
  throw Error("poincare_constant: inverse iteration stagnated");
}

/// Rigid body motions: translations and infinitesimal rotations about the origin.
template <int Dim>
struct RMBasis {
  std::vector<GridField<Dim>> fields;
  Eigen::MatrixXd gram;
  int dim() const { return static_cast<int>(fields.size()); }
};

template <int Dim>
void rigid_motion(int index, const Vec<Dim>& x, double* out) {
  for (int k = 0; k < Dim; ++k) out[k] = 0.0;
  if (index < Dim) {
    out[index] = 1.0;
    return;
  }
  if constexpr (Dim == 2) {
    out[0] = -x[1];
    out[1] = x[0];
  } else {
    // e_r x x
    const int r = index - Dim;
    const Vec<3> e{r == 0 ? 1.0 : 0.0, r == 1 ? 1.0 : 0.0, r == 2 ? 1.0 : 0.0};
    out[0] = e[1] * x[2] - e[2] * x[1];
    out[1] = e[2] * x[0] - e[0] * x[2];
    out[2] = e[0] * x[1] - e[1] * x[0];
  }
}

template <int Dim>
double inner_product(const GridField<Dim>& a, const GridField<Dim>& b) {
  if (a.values.size() != b.values.size() || a.components != b.components) throw Error("grid field shape mismatch");
  double s = 0.0;
  for (std::size_t n = 0; n < a.nodes(); ++n) {
    const double w = a.weight(n);
    for (int c = 0; c < a.components; ++c) s += w * a.at(n, c) * b.at(n, c);
  }
  return s;
}

template <int Dim>
RMBasis<Dim> rm_basis(const GridField<Dim>& geo) {
  RMBasis<Dim> rm;
  const int count = Dim == 2 ? 3 : 6;
  for (int r = 0; r < count; ++r) {
    GridField<Dim> f = geo.like(Dim);
    for (std::size_t n = 0; n < f.nodes(); ++n) rigid_motion<Dim>(r, f.point(n), &f.values[n * Dim]);
    rm.fields.push_back(std::move(f));
  }
  rm.gram.resize(count, count);
  for (int a = 0; a < count; ++a)
    for (int b = 0; b < count; ++b) rm.gram(a, b) = inner_product(rm.fields[a], rm.fields[b]);
  return rm;
}

template <int Dim>
struct RMProjection {
  std::vector<double> coefficients;
  GridField<Dim> residual;  // v - Pi_RM v
  double residual_norm = 0.0;
};

/// L2 projection onto rigid body motions and the remainder.
template <int Dim>
RMProjection<Dim> project_rm(const GridField<Dim>& v) {
  if (v.components != Dim) throw Error("project_rm: expected a vector field");
  const RMBasis<Dim> rm = rm_basis(v);
  Eigen::VectorXd rhs(rm.dim());
  for (int a = 0; a < rm.dim(); ++a) rhs(a) = inner_product(v, rm.fields[a]);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(rm.gram);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-14 * ldlt.vectorD().maxCoeff())
    throw Error("project_rm: singular Gram matrix");
  const Eigen::VectorXd c = ldlt.solve(rhs);
  RMProjection<Dim> out;
  out.coefficients.assign(c.data(), c.data() + c.size());
  out.residual = v;
  for (int a = 0; a < rm.dim(); ++a)
    for (std::size_t i = 0; i < v.values.size(); ++i) out.residual.values[i] -= c(a) * rm.fields[a].values[i];
  out.residual_norm = l2_norm(out.residual);
  return out;
}

// ---------------------------------------------------------------------------
// Staggered (MAC) Stokes pair for the inf-sup constant.

/// Velocity components on faces, pressure at cell centers; uniform cells.
template <int Dim>
class MacGrid {
 public:
  MacGrid(const StarDomain<Dim>& d, double h, bool full_norm) : full_norm_(full_norm) {
    if (d.kind() != DomainKind::rectangle && d.kind() != DomainKind::box)
      throw Error("inf-sup: rectangle or box domain required");
    const auto [lo, hi] = d.bounding_box();
    lo_ = lo;
    for (int k = 0; k < Dim; ++k) {
      cells_[k] = std::max(2, static_cast<int>(std::lround((hi[k] - lo[k]) / h)));
      h_[k] = (hi[k] - lo[k]) / cells_[k];
    }
    build();
  }

  int pressures() const { return np_; }
  int velocities() const { return nu_; }
  const std::array<int, Dim>& cells() const { return cells_; }
  const Vec<Dim>& spacing() const { return h_; }
  bool full_norm() const { return full_norm_; }

  Vec<Dim> cell_center(int p) const {
    Vec<Dim> x{};
    int r = p;
    for (int k = Dim - 1; k >= 0; --k) {
      x[k] = lo_[k] + (r % cells_[k] + 0.5) * h_[k];
      r /= cells_[k];
    }
    return x;
  }
  std::array<int, Dim> cell_index(int p) const {
    std::array<int, Dim> i{};
    for (int k = Dim - 1; k >= 0; --k) {
      i[k] = p % cells_[k];
      p /= cells_[k];
    }
    return i;
  }

  /// S p = B L^{-1} B^T p (the pressure Schur complement, volume factors cancelled).
  Eigen::VectorXd schur(const Eigen::VectorXd& p) const {
    const Eigen::VectorXd f = bt_ * p;
    const Eigen::VectorXd u = llt_.solve(f);
    return b_ * u;
  }

 private:
  void build() {
    np_ = 1;
    for (int c : cells_) np_ *= c;
    // Face unknowns of component c: interior faces along c, cells along the rest.
    std::vector<std::array<int, Dim>> fshape(Dim);
    std::vector<int> offset(Dim + 1, 0);
    for (int c = 0; c < Dim; ++c) {
      int count = 1;
      for (int k = 0; k < Dim; ++k) {
        fshape[c][k] = k == c ? cells_[k] - 1 : cells_[k];
        count *= fshape[c][k];
      }
      offset[c + 1] = offset[c] + count;
    }
    nu_ = offset[Dim];
    auto face_id = [&](int c, const std::array<int, Dim>& i) {
      int id = 0;
      for (int k = 0; k < Dim; ++k) id = id * fshape[c][k] + i[k];
      return offset[c] + id;
    };
    std::vector<Eigen::Triplet<double>> lt, bt;
    for (int c = 0; c < Dim; ++c) {
      const int count = offset[c + 1] - offset[c];
      for (int f = 0; f < count; ++f) {
        std::array<int, Dim> i{};
        int r = f;
        for (int k = Dim - 1; k >= 0; --k) {
          i[k] = r % fshape[c][k];
          r /= fshape[c][k];
        }
        const int row = offset[c] + f;
        double diag = full_norm_ ? 1.0 : 0.0;
        for (int k = 0; k < Dim; ++k) {
          const double inv = 1.0 / (h_[k] * h_[k]);
          for (int s : {-1, 1}) {
            std::array<int, Dim> j = i;
            j[k] += s;
            if (j[k] >= 0 && j[k] < fshape[c][k]) {
              diag += inv;
              lt.emplace_back(row, face_id(c, j), -inv);
            } else if (k == c) {
              diag += inv;  // Dirichlet node on the wall
            } else {
              diag += 2.0 * inv;  // wall half a cell away: ghost = -u
            }
          }
        }
        lt.emplace_back(row, row, diag);
        // Divergence: face between cells i (below, at index i[c]) and i + e_c.
        std::array<int, Dim> lo = i, hi = i;
        hi[c] += 1;
        auto cell_id = [&](const std::array<int, Dim>& q) {
          int id = 0;
          for (int k = 0; k < Dim; ++k) id = id * cells_[k] + q[k];
          return id;
        };
        bt.emplace_back(cell_id(lo), row, 1.0 / h_[c]);
        bt.emplace_back(cell_id(hi), row, -1.0 / h_[c]);
      }
    }
    Eigen::SparseMatrix<double> l(nu_, nu_);
    l.setFromTriplets(lt.begin(), lt.end());
    b_.resize(np_, nu_);
    b_.setFromTriplets(bt.begin(), bt.end());
    bt_ = b_.transpose();
    llt_.compute(l);
    if (llt_.info() != Eigen::Success) throw Error("inf-sup: velocity stiffness factorization failed");
  }

  bool full_norm_;
  Vec<Dim> lo_{};
  Vec<Dim> h_{};
  std::array<int, Dim> cells_{};
  int np_ = 0, nu_ = 0;
  Eigen::SparseMatrix<double> b_, bt_;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt_;
};

struct InfSupResult {
  double beta0 = 0.0;
  double mu = 0.0;  // smallest nonzero Schur eigenvalue, beta0 = sqrt(mu)
  bool full_norm = false;
  int steps = 0;
  double ritz_residual = 0.0;
  double checkerboard_fraction = 0.0;
  std::vector<double> mode;  // pressure eigenvector at cell centers
};

/// Smallest eigenpair of a symmetric operator on mean-free vectors: Lanczos with full
/// reorthogonalization (the bottom of the Schur spectrum clusters, so plain inverse iteration stalls).
template <typename Op>
std::pair<double, Eigen::VectorXd> lanczos_smallest(Op&& op, int n, unsigned seed, double tol, int max_steps,
                                                    int* steps_out, double* residual_out) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd q(n);
  for (int i = 0; i < n; ++i) q(i) = g(rng);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
  q -= ones * ones.dot(q);
  q.normalize();
  max_steps = std::min(max_steps, n - 1);
  Eigen::MatrixXd basis(n, max_steps);
  std::vector<double> alpha, beta;
  double theta = 0.0, res = 0.0;
  Eigen::VectorXd y;
  int m = 0;
  for (int j = 0; j < max_steps; ++j) {
    basis.col(j) = q;
    Eigen::VectorXd w = op(q);
    const double a = q.dot(w);
    alpha.push_back(a);
    for (int pass = 0; pass < 2; ++pass) {
      w -= ones * ones.dot(w);
      w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).transpose() * w);
    }
    const double b = w.norm();
    m = j + 1;
    if ((m % 10 == 0) || b < 1e-14 || m == max_steps) {
      Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
      for (int i = 0; i < m; ++i) {
        t(i, i) = alpha[i];
        if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[i];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
      theta = es.eigenvalues()(0);
      y = es.eigenvectors().col(0);
      res = b * std::abs(y(m - 1));
      if (res <= tol * std::abs(theta) || b < 1e-14) break;
    }
    beta.push_back(b);
    q = w / b;
  }
  if (steps_out) *steps_out = m;
  if (residual_out) *residual_out = res;
  Eigen::VectorXd v = basis.leftCols(m) * y;
  v.normalize();
  return {theta, v};
}

/// beta0 = inf_p sup_u (div u, p) / (||u|| ||p||) on the MAC discretization, pressures mean-free.
/// `full_norm` selects ||u||_1 (mass + stiffness) instead of |u|_1.
template <int Dim>
InfSupResult infsup_beta0(const StarDomain<Dim>& d, double h, bool full_norm = false, unsigned seed = 1,
                          double tol = 1e-8, int max_steps = 1500) {
  const MacGrid<Dim> mac(d, h, full_norm);
  InfSupResult out;
  out.full_norm = full_norm;
  auto [mu, v] = lanczos_smallest([&](const Eigen::VectorXd& p) { return mac.schur(p); }, mac.pressures(), seed, tol,
                                  max_steps, &out.steps, &out.ritz_residual);
  out.mu = mu;
  out.beta0 = std::sqrt(std::max(0.0, mu));
  // Checkerboard energy of the mode.
  double cb = 0.0;
  for (int p = 0; p < mac.pressures(); ++p) {
    const auto i = mac.cell_index(p);
    int parity = 0;
    for (int k = 0; k < Dim; ++k) parity += i[k];
    cb += (parity % 2 == 0 ? 1.0 : -1.0) * v(p);
  }
  out.checkerboard_fraction = cb * cb / mac.pressures();
  if (out.checkerboard_fraction > 0.5)
    throw Error("inf-sup: spurious checkerboard pressure mode (energy fraction " +
                std::to_string(out.checkerboard_fraction) + ")");
  out.mode.assign(v.data(), v.data() + v.size());
  return out;
}

// ---------------------------------------------------------------------------
// I/O: flat binary ("BGLF" header + row-major float64 payload) and CSV.

template <int Dim>
void write_binary(const GridField<Dim>& g, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  const char magic[4] = {'B', 'G', 'L', 'F'};
  os.write(magic, 4);
  auto put_u32 = [&](std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); };
  auto put_u64 = [&](std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); };
  auto put_f64 = [&](double v) { os.write(reinterpret_cast<const char*>(&v), 8); };
  put_u32(1);  // version
  put_u32(Dim);
  put_u32(static_cast<std::uint32_t>(g.components));
  for (int k = 0; k < Dim; ++k) put_u64(static_cast<std::uint64_t>(g.shape[k]));
  for (int k = 0; k < Dim; ++k) put_f64(g.h[k]);
  for (int k = 0; k < Dim; ++k) put_f64(g.lo[k]);
  os.write(reinterpret_cast<const char*>(g.values.data()), static_cast<std::streamsize>(g.values.size() * 8));
  if (!os) throw Error("write failed: " + path);
}

template <int Dim>
GridField<Dim> read_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "BGLF", 4) != 0) throw Error(path + ": not a grid field file");
  auto get_u32 = [&] {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  auto get_u64 = [&] {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  auto get_f64 = [&] {
    double v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  if (get_u32() != 1) throw Error(path + ": unsupported version");
  if (get_u32() != static_cast<std::uint32_t>(Dim)) throw Error(path + ": dimension mismatch");
  GridField<Dim> g;
  g.components = static_cast<int>(get_u32());
  for (int k = 0; k < Dim; ++k) g.shape[k] = static_cast<int>(get_u64());
  for (int k = 0; k < Dim; ++k) g.h[k] = get_f64();
  for (int k = 0; k < Dim; ++k) g.lo[k] = get_f64();
  if (!is || g.components < 1) throw Error(path + ": truncated header");
  g.values.resize(g.nodes() * g.components);
  is.read(reinterpret_cast<char*>(g.values.data()), static_cast<std::streamsize>(g.values.size() * 8));
  if (!is) throw Error(path + ": truncated payload");
  return g;
}

/// CSV with header x,y[,z],c0,...; values printed with 17 significant digits.
template <int Dim>
std::string to_csv(const GridField<Dim>& g) {
  std::ostringstream os;
  os << std::setprecision(17);
  const char* axes[3] = {"x", "y", "z"};
  for (int k = 0; k < Dim; ++k) os << axes[k] << ',';
  for (int c = 0; c < g.components; ++c) os << 'c' << c << (c + 1 < g.components ? "," : "\n");
  for (std::size_t n = 0; n < g.nodes(); ++n) {
    const Vec<Dim> x = g.point(n);
    for (int k = 0; k < Dim; ++k) os << x[k] << ',';
    for (int c = 0; c < g.components; ++c) os << g.at(n, c) << (c + 1 < g.components ? "," : "\n");
  }
  return os.str();
}

}  // namespace bogolab
