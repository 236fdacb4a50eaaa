#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "bogolab/core.hpp"
#include "bogolab/quadrature.hpp"

namespace bogolab {

enum class DomainKind { rectangle, box, ball, polar };

inline std::string to_string(DomainKind k) {
  switch (k) {
    case DomainKind::rectangle: return "rectangle";
    case DomainKind::box: return "box";
    case DomainKind::ball: return "ball";
    case DomainKind::polar: return "polar";
  }
  return "unknown";
}

/// Tensor or polar quadrature over a domain.
template <int Dim>
struct QuadratureRule {
  std::vector<Vec<Dim>> nodes;
  std::vector<double> weights;
  int order = 0;

  std::size_t size() const { return nodes.size(); }

  template <typename Fn>
  double integrate(Fn&& fn) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * fn(nodes[i]);
    return s;
  }
};

/// Exit data for the ray x + r d (r >= 0): distance to the boundary and its
/// derivatives with respect to the base point x.
template <int Dim>
struct RayExit {
  double distance = 0.0;
  Vec<Dim> normal{};    // outward normal at the exit point
  Vec<Dim> grad{};      // d distance / d x
  Mat<Dim> hess{};      // d^2 distance / d x^2
};

/// A bounded domain star-shaped with respect to the ball B_rho(star_center).
/// Rectangles are (-a,a) x (-eps,eps), boxes (-a,a) x (-b,b) x (-c,c), balls are
/// centered at the origin, polar domains are star polygons with vertices
/// profile[i] * (cos t_i, sin t_i), t_i = 2 pi i / N.
template <int Dim>
class StarDomain {
 public:
  static StarDomain rectangle(double a, double eps) {
    static_assert(Dim == 2, "rectangle is two-dimensional");
    if (!(a > 0.0) || !(eps > 0.0)) throw Error("rectangle: parameters must be positive");
    if (eps > a) throw Error("rectangle: eps must not exceed a");
    StarDomain d(DomainKind::rectangle);
    d.half_ = {a, eps};
    d.params_ = {a, eps};
    d.star_radius_ = eps;
    d.diameter_ = 2.0 * std::sqrt(a * a + eps * eps);
    d.axis_diameter_ = 2.0 * a;
    d.volume_ = 4.0 * a * eps;
    return d;
  }

  static StarDomain box(double a, double b, double c) {
    static_assert(Dim == 3, "box is three-dimensional");
    if (!(a > 0.0) || !(b > 0.0) || !(c > 0.0)) throw Error("box: parameters must be positive");
    StarDomain d(DomainKind::box);
    d.half_ = {a, b, c};
    d.params_ = {a, b, c};
    d.star_radius_ = std::min({a, b, c});
    d.diameter_ = 2.0 * std::sqrt(a * a + b * b + c * c);
    d.axis_diameter_ = 2.0 * std::max({a, b, c});
    d.volume_ = 8.0 * a * b * c;
    return d;
  }

  static StarDomain ball(double r) {
    if (!(r > 0.0)) throw Error("ball: radius must be positive");
    StarDomain d(DomainKind::ball);
    d.params_ = {r};
    d.half_.fill(r);
    d.star_radius_ = r;
    d.diameter_ = 2.0 * r;
    d.axis_diameter_ = 2.0 * r;
    d.volume_ = unit_ball_volume(Dim) * std::pow(r, Dim);
    return d;
  }

  /// Star polygon through equally spaced radial samples; the star ball is the
  /// largest inscribed ball of the polygon kernel.
  static StarDomain polar(const std::vector<double>& profile) {
    static_assert(Dim == 2, "polar domains are two-dimensional");
    if (profile.size() < 3) throw Error("polar: need at least three profile samples");
    for (double r : profile)
      if (!(r > 0.0)) throw Error("polar: profile radii must be positive");
    StarDomain d(DomainKind::polar);
    d.params_ = profile;
    const std::size_t n = profile.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
      d.vertices_.push_back({profile[i] * std::cos(t), profile[i] * std::sin(t)});
    }
    d.setup_polygon();
    return d;
  }

  DomainKind kind() const { return kind_; }
  const std::vector<double>& params() const { return params_; }
  static constexpr int dim() { return Dim; }
  const Vec<Dim>& star_center() const { return star_center_; }
  double star_radius() const { return star_radius_; }
  double diameter() const { return diameter_; }
  /// Twice the largest half-extent (2a for the rectangle family).
  double axis_diameter() const { return axis_diameter_; }
  double volume() const { return volume_; }
  const std::vector<Vec<2>>& vertices() const { return vertices_; }

  /// Axis-aligned bounding box [lo, hi].
  std::pair<Vec<Dim>, Vec<Dim>> bounding_box() const {
    Vec<Dim> lo{}, hi{};
    if (kind_ == DomainKind::polar) {
      lo = {std::numeric_limits<double>::max(), std::numeric_limits<double>::max()};
      hi = {-lo[0], -lo[1]};
      for (const auto& v : vertices_)
        for (int i = 0; i < 2; ++i) {
          lo[i] = std::min(lo[i], v[i]);
          hi[i] = std::max(hi[i], v[i]);
        }
      return {lo, hi};
    }
    for (int i = 0; i < Dim; ++i) {
      lo[i] = -half_[i];
      hi[i] = half_[i];
    }
    return {lo, hi};
  }

  /// Closed-set membership.
  bool contains(const Vec<Dim>& x) const {
    switch (kind_) {
      case DomainKind::rectangle:
      case DomainKind::box:
        for (int i = 0; i < Dim; ++i)
          if (std::abs(x[i]) > half_[i]) return false;
        return true;
      case DomainKind::ball:
        return dot<Dim>(x, x) <= params_[0] * params_[0];
      case DomainKind::polar:
        if constexpr (Dim == 2) return polygon_contains(x);
    }
    return false;
  }

  /// Distance from x (inside) along unit direction d to the boundary, with derivatives in x.
  RayExit<Dim> exit(const Vec<Dim>& x, const Vec<Dim>& d) const {
    RayExit<Dim> out;
    if (kind_ == DomainKind::ball) {
      const double r = params_[0];
      const double b = dot<Dim>(x, d);
      const double c = dot<Dim>(x, x) - r * r;
      const double disc = std::max(0.0, b * b - c);
      out.distance = std::max(0.0, -b + std::sqrt(disc));
      const Vec<Dim> g = x + out.distance * d;
      out.normal = (1.0 / r) * g;
      const double gd = dot<Dim>(g, d);
      if (gd <= 0.0) return out;
      for (int j = 0; j < Dim; ++j) out.grad[j] = -g[j] / gd;
      for (int j = 0; j < Dim; ++j)
        for (int l = 0; l < Dim; ++l) {
          const double dgj = (j == l ? 1.0 : 0.0) + out.grad[l] * d[j];
          const double dgd = d[l] + out.grad[l];
          out.hess[j][l] = -(dgj * gd - g[j] * dgd) / (gd * gd);
        }
      return out;
    }
    // Polyhedral kinds: first face hit.
    double best = std::numeric_limits<double>::infinity();
    Vec<Dim> best_normal{};
    auto consider = [&](const Vec<Dim>& nrm, double offset) {
      const double nd = dot<Dim>(nrm, d);
      if (nd <= 0.0) return;
      const double t = (offset - dot<Dim>(nrm, x)) / nd;
      if (t < best) {
        best = t;
        best_normal = nrm;
      }
    };
    if (kind_ == DomainKind::polar) {
      if constexpr (Dim == 2) {
        for (const auto& e : edges_) {
          // Only edges whose segment is actually crossed count for non-convex polygons.
          const double nd = e.normal[0] * d[0] + e.normal[1] * d[1];
          if (nd <= 0.0) continue;
          const double t = (e.offset - (e.normal[0] * x[0] + e.normal[1] * x[1])) / nd;
          if (t < -1e-14) continue;
          const Vec<2> p{x[0] + t * d[0], x[1] + t * d[1]};
          const Vec<2> ab = e.b - e.a;
          const double s = ((p[0] - e.a[0]) * ab[0] + (p[1] - e.a[1]) * ab[1]) / dot<2>(ab, ab);
          if (s < -1e-12 || s > 1.0 + 1e-12) continue;
          if (t < best) {
            best = t;
            best_normal = e.normal;
          }
        }
      }
    } else {
      for (int i = 0; i < Dim; ++i) {
        Vec<Dim> nrm{};
        nrm[i] = 1.0;
        consider(nrm, half_[i]);
        nrm[i] = -1.0;
        consider(nrm, half_[i]);
      }
    }
    out.distance = std::max(0.0, best);
    out.normal = best_normal;
    const double nd = dot<Dim>(best_normal, d);
    for (int j = 0; j < Dim; ++j) out.grad[j] = -best_normal[j] / nd;
    return out;
  }

  /// Unit directions from x to the corners where the exit distance has kinks.
  std::vector<Vec<Dim>> kink_directions(const Vec<Dim>& x) const {
    std::vector<Vec<Dim>> out;
    auto add = [&](const Vec<Dim>& v) {
      const Vec<Dim> d = v - x;
      const double n = norm<Dim>(d);
      if (n > 0.0) out.push_back((1.0 / n) * d);
    };
    if (kind_ == DomainKind::rectangle) {
      if constexpr (Dim == 2)
        for (int sx : {-1, 1})
          for (int sy : {-1, 1}) add(Vec<Dim>{sx * half_[0], sy * half_[1]});
    } else if (kind_ == DomainKind::polar) {
      if constexpr (Dim == 2)
        for (const auto& v : vertices_) add(v);
    } else if (kind_ == DomainKind::ball) {
      // Directions tangent to the sphere through x: the exit distance bends sharply there
      // when x is close to the boundary.
      if constexpr (Dim == 2) {
        const double r = norm<Dim>(x);
        if (r > 0.0) {
          out.push_back(Vec<Dim>{-x[1] / r, x[0] / r});
          out.push_back(Vec<Dim>{x[1] / r, -x[0] / r});
        }
      }
    }
    return out;
  }

  /// Quadrature over the domain; `resolution` is the Gauss order per axis (or per panel).
  QuadratureRule<Dim> quadrature(int resolution) const {
    if (resolution < 2) throw Error("quadrature: resolution must be at least 2");
    QuadratureRule<Dim> q;
    q.order = resolution;
    if (kind_ == DomainKind::rectangle || kind_ == DomainKind::box) {
      const double shortest = *std::min_element(half_.begin(), half_.begin() + Dim);
      std::array<Rule1D, Dim> axes;
      for (int i = 0; i < Dim; ++i) {
        const int panels = std::max(1, static_cast<int>(std::lround(half_[i] / shortest)));
        axes[i] = composite_gauss(-half_[i], half_[i], panels, resolution);
      }
      if constexpr (Dim == 2) {
        for (std::size_t i = 0; i < axes[0].size(); ++i)
          for (std::size_t j = 0; j < axes[1].size(); ++j) {
            q.nodes.push_back({axes[0].nodes[i], axes[1].nodes[j]});
            q.weights.push_back(axes[0].weights[i] * axes[1].weights[j]);
          }
      } else {
        for (std::size_t i = 0; i < axes[0].size(); ++i)
          for (std::size_t j = 0; j < axes[1].size(); ++j)
            for (std::size_t k = 0; k < axes[2].size(); ++k) {
              q.nodes.push_back({axes[0].nodes[i], axes[1].nodes[j], axes[2].nodes[k]});
              q.weights.push_back(axes[0].weights[i] * axes[1].weights[j] * axes[2].weights[k]);
            }
      }
      return q;
    }
    if (kind_ == DomainKind::ball) {
      const double r = params_[0];
      const Rule1D radial = gauss_on(0.0, r, resolution);
      const Rule1D phi = periodic_trapezoid(2 * resolution);
      if constexpr (Dim == 2) {
        for (std::size_t a = 0; a < phi.size(); ++a)
          for (std::size_t i = 0; i < radial.size(); ++i) {
            const double rr = radial.nodes[i];
            q.nodes.push_back({rr * std::cos(phi.nodes[a]), rr * std::sin(phi.nodes[a])});
            q.weights.push_back(phi.weights[a] * radial.weights[i] * rr);
          }
      } else {
        const Rule1D mu = gauss_on(-1.0, 1.0, resolution);
        for (std::size_t p = 0; p < mu.size(); ++p) {
          const double ct = mu.nodes[p], st = std::sqrt(1.0 - ct * ct);
          for (std::size_t a = 0; a < phi.size(); ++a)
            for (std::size_t i = 0; i < radial.size(); ++i) {
              const double rr = radial.nodes[i];
              q.nodes.push_back({rr * st * std::cos(phi.nodes[a]), rr * st * std::sin(phi.nodes[a]), rr * ct});
              q.weights.push_back(mu.weights[p] * phi.weights[a] * radial.weights[i] * rr * rr);
            }
        }
      }
      return q;
    }
    // Polar polygon: angular Gauss between vertex angles, radial Gauss out to the edge.
    if constexpr (Dim == 2) {
      const std::size_t n = vertices_.size();
      std::vector<double> breaks;
      for (std::size_t i = 0; i <= n; ++i) breaks.push_back(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
      const Rule1D ang = piecewise_gauss(breaks, resolution, 2.0 * std::numbers::pi);
      const Rule1D ref = gauss_on(0.0, 1.0, resolution);
      for (std::size_t a = 0; a < ang.size(); ++a) {
        const Vec<2> d{std::cos(ang.nodes[a]), std::sin(ang.nodes[a])};
        const double len = exit(Vec<2>{0.0, 0.0}, d).distance;
        for (std::size_t i = 0; i < ref.size(); ++i) {
          const double rr = len * ref.nodes[i];
          q.nodes.push_back({rr * d[0], rr * d[1]});
          q.weights.push_back(ang.weights[a] * ref.weights[i] * len * rr);
        }
      }
    }
    return q;
  }

  /// Points on the boundary moved inward by `offset` along the inward normal.
  std::vector<Vec<Dim>> boundary_samples(int count, double offset) const {
    std::vector<Vec<Dim>> pts;
    if (kind_ == DomainKind::ball) {
      const double r = params_[0] - offset;
      if constexpr (Dim == 2) {
        for (int i = 0; i < count; ++i) {
          const double t = 2.0 * std::numbers::pi * (i + 0.5) / count;
          pts.push_back({r * std::cos(t), r * std::sin(t)});
        }
      } else {
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int i = 0; i < count; ++i) {
          const double z = 1.0 - 2.0 * (i + 0.5) / count;
          const double s = std::sqrt(1.0 - z * z);
          pts.push_back({r * s * std::cos(golden * i), r * s * std::sin(golden * i), r * z});
        }
      }
      return pts;
    }
    if constexpr (Dim == 2) {
      std::vector<std::pair<Vec<2>, Vec<2>>> segs;
      if (kind_ == DomainKind::rectangle) {
        const double a = half_[0], e = half_[1];
        const std::vector<Vec<2>> c{{-a, -e}, {a, -e}, {a, e}, {-a, e}};
        for (int i = 0; i < 4; ++i) segs.push_back({c[i], c[(i + 1) % 4]});
      } else {
        for (const auto& ed : edges_) segs.push_back({ed.a, ed.b});
      }
      double perimeter = 0.0;
      for (const auto& s : segs) perimeter += norm<2>(s.second - s.first);
      for (int i = 0; i < count; ++i) {
        double arc = perimeter * (i + 0.5) / count;
        for (const auto& s : segs) {
          const Vec<2> ab = s.second - s.first;
          const double len = norm<2>(ab);
          if (arc <= len) {
            const Vec<2> p = s.first + (arc / len) * ab;
            const Vec<2> inward{-ab[1] / len, ab[0] / len};  // counter-clockwise orientation
            pts.push_back(p + offset * inward);
            break;
          }
          arc -= len;
        }
      }
    } else {
      // Box: stratified points on the six faces, proportional to face area.
      const Vec<3> h{half_[0], half_[1], half_[2]};
      const double areas[3] = {h[1] * h[2], h[0] * h[2], h[0] * h[1]};
      const double total = 2.0 * (areas[0] + areas[1] + areas[2]);
      for (int axis = 0; axis < 3; ++axis)
        for (int side : {-1, 1}) {
          const int m = std::max(1, static_cast<int>(std::lround(count * areas[axis] / total)));
          const int g = std::max(1, static_cast<int>(std::ceil(std::sqrt(double(m)))));
          const int u = (axis + 1) % 3, v = (axis + 2) % 3;
          for (int i = 0; i < g; ++i)
            for (int j = 0; j < g; ++j) {
              Vec<3> p{};
              p[axis] = side * (h[axis] - offset);
              p[u] = h[u] * (-1.0 + 2.0 * (i + 0.5) / g);
              p[v] = h[v] * (-1.0 + 2.0 * (j + 0.5) / g);
              pts.push_back(p);
            }
        }
    }
    return pts;
  }

  /// Spot check of the star-shapedness invariants; returns the number of violations.
  int star_check_violations() const {
    int bad = 0;
    const double r = star_radius_ * (1.0 - 1e-9);
    std::vector<Vec<Dim>> ball_pts;
    if constexpr (Dim == 2) {
      for (int i = 0; i < 256; ++i) {
        const double t = 2.0 * std::numbers::pi * i / 256.0;
        ball_pts.push_back(star_center_ + r * Vec<2>{std::cos(t), std::sin(t)});
      }
    } else {
      const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
      for (int i = 0; i < 256; ++i) {
        const double z = 1.0 - 2.0 * (i + 0.5) / 256.0;
        const double s = std::sqrt(1.0 - z * z);
        ball_pts.push_back(star_center_ + r * Vec<3>{s * std::cos(golden * i), s * std::sin(golden * i), z});
      }
    }
    for (const auto& p : ball_pts)
      if (!contains(p)) ++bad;
    // Segments from 64 points of the star ball to 64 boundary points.
    std::vector<Vec<Dim>> bnd = boundary_samples(64, 1e-9 * diameter_);
    bnd.resize(std::min<std::size_t>(bnd.size(), 64));
    for (int i = 0; i < 64; ++i) {
      const Vec<Dim>& y = ball_pts[(i * 4) % ball_pts.size()];
      const Vec<Dim> ys = star_center_ + ((i % 4 + 1) / 4.0) * (y - star_center_);
      for (const auto& x : bnd)
        for (int k = 1; k < 16; ++k) {
          const double t = k / 16.0;
          if (!contains(ys + t * (x - ys))) {
            ++bad;
            break;
          }
        }
    }
    return bad;
  }

 private:
  struct Edge {
    Vec<2> a, b;
    Vec<2> normal;  // outward
    double offset;  // normal . p = offset on the edge
  };

  explicit StarDomain(DomainKind k) : kind_(k) {
    check_dim<Dim>();
    star_center_.fill(0.0);
    half_.fill(0.0);
  }

  bool polygon_contains(const Vec<2>& x) const {
    // Winding test against the vertex fan (the polygon is star-shaped about the origin).
    bool inside = false;
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const auto& vi = vertices_[i];
      const auto& vj = vertices_[j];
      if ((vi[1] > x[1]) != (vj[1] > x[1])) {
        const double xc = vj[0] + (x[1] - vj[1]) * (vi[0] - vj[0]) / (vi[1] - vj[1]);
        if (x[0] < xc) inside = !inside;
      }
    }
    if (inside) return true;
    // Closed convention: points on an edge count as inside.
    for (const auto& e : edges_) {
      const Vec<2> ab = e.b - e.a;
      const double t = std::clamp(dot<2>(x - e.a, ab) / dot<2>(ab, ab), 0.0, 1.0);
      if (norm<2>(x - (e.a + t * ab)) <= 1e-14 * diameter_) return true;
    }
    return false;
  }

  double inscribed_radius(const Vec<2>& c) const {
    double r = std::numeric_limits<double>::infinity();
    for (const auto& e : edges_) r = std::min(r, e.offset - dot<2>(e.normal, c));
    return r;
  }

  void setup_polygon() {
    if constexpr (Dim == 2) {
      const std::size_t n = vertices_.size();
      edges_.clear();
      for (std::size_t i = 0; i < n; ++i) {
        const Vec<2> a = vertices_[i], b = vertices_[(i + 1) % n];
        const Vec<2> ab = b - a;
        const double len = norm<2>(ab);
        const Vec<2> nrm{ab[1] / len, -ab[0] / len};
        edges_.push_back({a, b, nrm, dot<2>(nrm, a)});
      }
      diameter_ = 0.0;
      for (const auto& p : vertices_)
        for (const auto& q : vertices_) diameter_ = std::max(diameter_, norm<2>(p - q));
      double area = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& p = vertices_[i];
        const auto& q = vertices_[(i + 1) % n];
        area += 0.5 * (p[0] * q[1] - q[0] * p[1]);
      }
      volume_ = area;
      auto [lo, hi] = bounding_box();
      axis_diameter_ = std::max(hi[0] - lo[0], hi[1] - lo[1]);
      // Largest ball inside the kernel (intersection of inner half-planes):
      // coarse grid over the bounding box, then pattern search on the concave radius map.
      Vec<2> best{0.0, 0.0};
      double best_r = inscribed_radius(best);
      const int g = 40;
      for (int i = 0; i <= g; ++i)
        for (int j = 0; j <= g; ++j) {
          const Vec<2> c{lo[0] + (hi[0] - lo[0]) * i / g, lo[1] + (hi[1] - lo[1]) * j / g};
          const double r = inscribed_radius(c);
          if (r > best_r) {
            best_r = r;
            best = c;
          }
        }
      double step = std::max(hi[0] - lo[0], hi[1] - lo[1]) / g;
      while (step > 1e-13 * diameter_) {
        bool moved = false;
        for (const Vec<2> dir : {Vec<2>{1, 0}, Vec<2>{-1, 0}, Vec<2>{0, 1}, Vec<2>{0, -1}, Vec<2>{1, 1},
                                 Vec<2>{1, -1}, Vec<2>{-1, 1}, Vec<2>{-1, -1}}) {
          const Vec<2> c = best + step * dir;
          const double r = inscribed_radius(c);
          if (r > best_r) {
            best_r = r;
            best = c;
            moved = true;
          }
        }
        if (!moved) step *= 0.5;
      }
      if (!(best_r > 0.0)) throw Error("polar: profile is not star-shaped with respect to any ball");
      star_center_ = best;
      star_radius_ = best_r;
      if (star_check_violations() != 0) throw Error("polar: star-shapedness check failed");
    }
  }

  DomainKind kind_;
  std::vector<double> params_;
  Vec<Dim> half_{};
  Vec<Dim> star_center_{};
  double star_radius_ = 0.0;
  double diameter_ = 0.0;
  double axis_diameter_ = 0.0;
  double volume_ = 0.0;
  std::vector<Vec<2>> vertices_;
  std::vector<Edge> edges_;
};

/// Generic constructor by kind and parameter list.
template <int Dim>
StarDomain<Dim> make_domain(DomainKind kind, const std::vector<double>& p) {
  auto need = [&](std::size_t n) {
    if (p.size() != n) throw Error("make_domain: " + to_string(kind) + " expects " + std::to_string(n) + " parameters");
  };
  switch (kind) {
    case DomainKind::rectangle:
      if constexpr (Dim == 2) {
        need(2);
        return StarDomain<2>::rectangle(p[0], p[1]);
      }
      break;
    case DomainKind::box:
      if constexpr (Dim == 3) {
        need(3);
        return StarDomain<3>::box(p[0], p[1], p[2]);
      }
      break;
    case DomainKind::ball:
      need(1);
      return StarDomain<Dim>::ball(p[0]);
    case DomainKind::polar:
      if constexpr (Dim == 2) return StarDomain<2>::polar(p);
      break;
  }
  throw Error("make_domain: " + to_string(kind) + " is not available in dimension " + std::to_string(Dim));
}

}  // namespace bogolab
