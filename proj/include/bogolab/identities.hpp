#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <vector>

#include "bogolab/core.hpp"
#include "bogolab/stardomain.hpp"

namespace bogolab {

inline constexpr int kMaxPolyDegree = 6;

/// Multivariate polynomial in up to three variables as a sparse coefficient map.
/// Exponents of unused variables stay zero.
class Poly {
 public:
  using Exponent = std::array<int, 3>;

  Poly() = default;
  static Poly constant(double c) {
    Poly p;
    p.add_term({0, 0, 0}, c);
    return p;
  }
  static Poly monomial(const Exponent& e, double c = 1.0) {
    Poly p;
    p.add_term(e, c);
    return p;
  }
  static Poly variable(int axis) {
    Exponent e{0, 0, 0};
    e[axis] = 1;
    return monomial(e);
  }

  void add_term(const Exponent& e, double c) {
    if (c == 0.0) return;
    auto it = terms_.find(e);
    if (it == terms_.end()) {
      terms_.emplace(e, c);
    } else if ((it->second += c) == 0.0) {
      terms_.erase(it);
    }
  }

  const std::map<Exponent, double>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  int degree() const {
    int d = -1;
    for (const auto& [e, c] : terms_) d = std::max(d, e[0] + e[1] + e[2]);
    return d;
  }

  double max_abs_coefficient() const {
    double m = 0.0;
    for (const auto& [e, c] : terms_) m = std::max(m, std::abs(c));
    return m;
  }

  /// Exact: exponent shift and integer factor.
  Poly deriv(int axis) const {
    Poly out;
    for (const auto& [e, c] : terms_) {
      if (e[axis] == 0) continue;
      Exponent f = e;
      --f[axis];
      out.add_term(f, c * e[axis]);
    }
    return out;
  }

  template <int Dim>
  double eval(const Vec<Dim>& x) const {
    double s = 0.0;
    for (const auto& [e, c] : terms_) {
      double m = c;
      for (int k = 0; k < Dim; ++k) m *= std::pow(x[k], e[k]);
      s += m;
    }
    return s;
  }

  /// Integral over the box prod_k [-half[k], half[k]] (exact: odd powers vanish).
  template <int Dim>
  double integrate_centered_box(const Vec<Dim>& half) const {
    double s = 0.0;
    for (const auto& [e, c] : terms_) {
      double m = c;
      for (int k = 0; k < Dim && m != 0.0; ++k)
        m = (e[k] % 2 == 1) ? 0.0 : m * 2.0 * std::pow(half[k], e[k] + 1) / (e[k] + 1);
      s += m;
    }
    return s;
  }

  friend Poly operator+(Poly a, const Poly& b) {
    for (const auto& [e, c] : b.terms_) a.add_term(e, c);
    return a;
  }
  friend Poly operator-(Poly a, const Poly& b) {
    for (const auto& [e, c] : b.terms_) a.add_term(e, -c);
    return a;
  }
  friend Poly operator*(double s, const Poly& a) {
    Poly out;
    for (const auto& [e, c] : a.terms_) out.add_term(e, s * c);
    return out;
  }
  friend Poly operator*(const Poly& a, const Poly& b) {
    Poly out;
    for (const auto& [ea, ca] : a.terms_)
      for (const auto& [eb, cb] : b.terms_) out.add_term({ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]}, ca * cb);
    return out;
  }
  friend bool operator==(const Poly& a, const Poly& b) { return a.terms_ == b.terms_; }

 private:
  std::map<Exponent, double> terms_;
};

/// Seeded polynomial with every monomial of total degree <= `degree` in `dim` variables.
/// Coefficients are uniform on the dyadic lattice k/1024 in [-1, 1]: sums and integer
/// multiples then stay exact in double, so identities cancel to exactly zero.
inline Poly random_poly(int dim, int degree, std::mt19937_64& rng) {
  if (degree < 0 || degree > kMaxPolyDegree) throw Error("random_poly: degree must be in [0, 6]");
  if (dim < 1 || dim > 3) throw Error("random_poly: dimension must be 1..3");
  std::uniform_int_distribution<int> u(-1024, 1024);
  Poly p;
  for (int a = 0; a <= degree; ++a)
    for (int b = 0; b <= (dim > 1 ? degree - a : 0); ++b)
      for (int c = 0; c <= (dim > 2 ? degree - a - b : 0); ++c) p.add_term({a, b, c}, u(rng) / 1024.0);
  return p;
}

/// Vector (rows = 1) or tensor (rows = cols = dim) polynomial field, row-major.
struct PolyField {
  int dim = 3;
  int rows = 1;
  int cols = 3;
  std::vector<Poly> entries;

  static PolyField vector(int dim) { return {dim, 1, dim, std::vector<Poly>(dim)}; }
  static PolyField tensor(int dim) { return {dim, dim, dim, std::vector<Poly>(dim * dim)}; }

  bool is_vector() const { return rows == 1; }
  Poly& operator()(int i) { return entries.at(i); }
  const Poly& operator()(int i) const { return entries.at(i); }
  Poly& operator()(int i, int j) { return entries.at(i * cols + j); }
  const Poly& operator()(int i, int j) const { return entries.at(i * cols + j); }

  int degree() const {
    int d = -1;
    for (const auto& p : entries) d = std::max(d, p.degree());
    return d;
  }
  double max_abs_coefficient() const {
    double m = 0.0;
    for (const auto& p : entries) m = std::max(m, p.max_abs_coefficient());
    return m;
  }
  bool is_symmetric() const {
    if (rows != cols) return false;
    for (int i = 0; i < rows; ++i)
      for (int j = i + 1; j < cols; ++j)
        if (!((*this)(i, j) == (*this)(j, i))) return false;
    return true;
  }
};

inline PolyField random_vector_field(int dim, int degree, std::mt19937_64& rng) {
  PolyField u = PolyField::vector(dim);
  for (auto& p : u.entries) p = random_poly(dim, degree, rng);
  return u;
}

/// (grad u)_{ij} = d_j u_i.
inline PolyField gradient(const PolyField& u) {
  if (!u.is_vector()) throw Error("gradient: vector field required");
  PolyField g = PolyField::tensor(u.dim);
  for (int i = 0; i < u.dim; ++i)
    for (int j = 0; j < u.dim; ++j) g(i, j) = u(i).deriv(j);
  return g;
}

inline PolyField transpose(const PolyField& a) {
  PolyField t = PolyField::tensor(a.dim);
  for (int i = 0; i < a.dim; ++i)
    for (int j = 0; j < a.dim; ++j) t(i, j) = a(j, i);
  return t;
}

inline PolyField sym_gradient(const PolyField& u) {
  const PolyField g = gradient(u);
  PolyField s = PolyField::tensor(u.dim);
  for (int i = 0; i < u.dim; ++i)
    for (int j = 0; j < u.dim; ++j) s(i, j) = 0.5 * (g(i, j) + g(j, i));
  return s;
}

/// curl u in 3D.
inline PolyField curl(const PolyField& u) {
  if (!u.is_vector() || u.dim != 3) throw Error("curl: three-dimensional vector field required");
  PolyField c = PolyField::vector(3);
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3, k = (i + 2) % 3;
    c(i) = u(k).deriv(j) - u(j).deriv(k);
  }
  return c;
}

/// 2D scalar curl d_1 v_2 - d_2 v_1.
inline Poly scalar_curl(const PolyField& v) {
  if (!v.is_vector() || v.dim != 2) throw Error("scalar_curl: two-dimensional vector field required");
  return v(1).deriv(0) - v(0).deriv(1);
}

/// Curl applied to each row of a 3x3 tensor.
inline PolyField row_curl(const PolyField& a) {
  if (a.dim != 3 || a.rows != 3) throw Error("row_curl: 3x3 tensor required");
  PolyField out = PolyField::tensor(3);
  for (int i = 0; i < 3; ++i) {
    PolyField row = PolyField::vector(3);
    for (int j = 0; j < 3; ++j) row(j) = a(i, j);
    const PolyField c = curl(row);
    for (int j = 0; j < 3; ++j) out(i, j) = c(j);
  }
  return out;
}

inline Poly divergence(const PolyField& u) {
  if (!u.is_vector()) throw Error("divergence: vector field required");
  Poly s;
  for (int i = 0; i < u.dim; ++i) s = s + u(i).deriv(i);
  return s;
}

/// Row-wise divergence (div tau)_i = sum_j d_j tau_ij.
inline PolyField divergence_rows(const PolyField& t) {
  PolyField d = PolyField::vector(t.dim);
  for (int i = 0; i < t.dim; ++i)
    for (int j = 0; j < t.dim; ++j) d(i) = d(i) + t(i, j).deriv(j);
  return d;
}

/// The difference tensor [grad(curl u)]^T - 2 curl(grad_S u), entry (i,j) = d_i (curl u)_j - ...
inline PolyField curl_grad_difference(const PolyField& u) {
  if (!u.is_vector() || u.dim != 3) throw Error("curl_grad_identity: three-dimensional vector field required");
  if (u.degree() > kMaxPolyDegree) throw Error("curl_grad_identity: degree above 6");
  const PolyField c = curl(u);
  const PolyField rhs = row_curl(sym_gradient(u));
  PolyField diff = PolyField::tensor(3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) diff(i, j) = c(j).deriv(i) - 2.0 * rhs(i, j);
  return diff;
}

/// Largest |coefficient| of the difference tensor; exactly 0 when the identity holds.
inline double curl_grad_identity(const PolyField& u) { return curl_grad_difference(u).max_abs_coefficient(); }

/// Finite-difference version for a general smooth field: both sides evaluated at x by
/// nested 4th-order central differences along different paths (curl first vs. grad_S first).
inline double curl_grad_identity_fd(const std::function<Vec<3>(const Vec<3>&)>& u, const Vec<3>& x,
                                    double h = 1e-2) {
  auto d = [h](const std::function<double(const Vec<3>&)>& f, int k, const Vec<3>& y) {
    Vec<3> p = y, m = y, p2 = y, m2 = y;
    p[k] += h;
    m[k] -= h;
    p2[k] += 2.0 * h;
    m2[k] -= 2.0 * h;
    return (8.0 * (f(p) - f(m)) - (f(p2) - f(m2))) / (12.0 * h);
  };
  auto curl_j = [&](int j, const Vec<3>& y) {
    const int a = (j + 1) % 3, b = (j + 2) % 3;
    return d([&](const Vec<3>& z) { return u(z)[b]; }, a, y) - d([&](const Vec<3>& z) { return u(z)[a]; }, b, y);
  };
  auto sym_grad = [&](int r, int c, const Vec<3>& y) {
    return 0.5 * (d([&](const Vec<3>& z) { return u(z)[r]; }, c, y) + d([&](const Vec<3>& z) { return u(z)[c]; }, r, y));
  };
  double worst = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double lhs = d([&](const Vec<3>& z) { return curl_j(j, z); }, i, x);
      const int a = (j + 1) % 3, b = (j + 2) % 3;
      const double rhs = 2.0 * (d([&](const Vec<3>& z) { return sym_grad(i, b, z); }, a, x) -
                                d([&](const Vec<3>& z) { return sym_grad(i, a, z); }, b, x));
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  return worst;
}

/// Product of side bubbles prod_k (half_k^2 - x_k^2): vanishes on the box boundary.
inline Poly box_bubble(const std::vector<double>& half) {
  Poly b = Poly::constant(1.0);
  for (std::size_t k = 0; k < half.size(); ++k) {
    Poly::Exponent e{0, 0, 0};
    e[k] = 2;
    b = b * (Poly::constant(half[k] * half[k]) - Poly::monomial(e));
  }
  return b;
}

struct PairingResult {
  double grad_pairing = 0.0;  // <grad v, tau>
  double sym_pairing = 0.0;   // <grad_S v, tau>
  double by_parts = 0.0;      // -int v . div tau
  double discrepancy = 0.0;   // |grad_pairing - sym_pairing|
};

/// Pairings of v with bubble * tau over the centered rectangle/box, exact polynomial integration.
/// No symmetry requirement (used for the skew control case).
template <int Dim>
PairingResult tensor_pairings(const PolyField& v, const PolyField& tau, const StarDomain<Dim>& d) {
  if (d.kind() != DomainKind::rectangle && d.kind() != DomainKind::box)
    throw Error("pairing check: rectangle or box domain required");
  if (!v.is_vector() || v.dim != Dim || tau.dim != Dim || tau.rows != Dim) throw Error("pairing check: shape mismatch");
  const auto [lo, hi] = d.bounding_box();
  Vec<Dim> half{};
  std::vector<double> hv;
  for (int k = 0; k < Dim; ++k) {
    if (std::abs(lo[k] + hi[k]) > 1e-14 * (hi[k] - lo[k])) throw Error("pairing check: domain must be centered");
    half[k] = hi[k];
    hv.push_back(hi[k]);
  }
  const Poly bubble = box_bubble(hv);
  PolyField t = PolyField::tensor(Dim);
  for (int i = 0; i < Dim * Dim; ++i) t.entries[i] = bubble * tau.entries[i];
  const PolyField g = gradient(v), s = sym_gradient(v), div = divergence_rows(t);
  Poly pg, ps, pb;
  for (int i = 0; i < Dim; ++i) {
    pb = pb - v(i) * div(i);
    for (int j = 0; j < Dim; ++j) {
      pg = pg + g(i, j) * t(i, j);
      ps = ps + s(i, j) * t(i, j);
    }
  }
  PairingResult r;
  r.grad_pairing = pg.integrate_centered_box<Dim>(half);
  r.sym_pairing = ps.integrate_centered_box<Dim>(half);
  r.by_parts = pb.integrate_centered_box<Dim>(half);
  r.discrepancy = std::abs(r.grad_pairing - r.sym_pairing);
  return r;
}

/// <grad v, tau> = <grad_S v, tau> for symmetric tau vanishing on the boundary; returns the pairings.
template <int Dim>
PairingResult symmetric_pairing_check(const PolyField& v, const PolyField& tau, const StarDomain<Dim>& d) {
  if (!tau.is_symmetric()) throw Error("symmetric_pairing_check: tau is not symmetric");
  return tensor_pairings<Dim>(v, tau, d);
}

inline PolyField symmetric_part(const PolyField& a) {
  PolyField s = PolyField::tensor(a.dim);
  for (int i = 0; i < a.dim; ++i)
    for (int j = 0; j < a.dim; ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
  return s;
}

inline PolyField skew_part(const PolyField& a) {
  PolyField s = PolyField::tensor(a.dim);
  for (int i = 0; i < a.dim; ++i)
    for (int j = 0; j < a.dim; ++j) s(i, j) = 0.5 * (a(i, j) - a(j, i));
  return s;
}

inline PolyField random_tensor_field(int dim, int degree, std::mt19937_64& rng) {
  PolyField t = PolyField::tensor(dim);
  for (auto& p : t.entries) p = random_poly(dim, degree, rng);
  return t;
}

}  // namespace bogolab
