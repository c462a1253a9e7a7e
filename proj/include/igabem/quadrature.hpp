#pragma once

// Gauss-Legendre rules and the point generators used for regular, nearly
// singular and singular integrals. Generators are templates over a geometry
// map and hand (parameter, point, weight) triples to a visitor, so the same
// point sets serve kernel integrals with arbitrary densities as well as the
// assembly of linear operators.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "igabem/errors.hpp"
#include "igabem/nurbs.hpp"

namespace igabem {

/// Gauss points on [-1,1] and their weights.
struct QuadratureRule {
  std::vector<double> points;
  std::vector<double> weights;
  std::size_t size() const { return points.size(); }
};

inline constexpr int kMaxGaussOrder = 64;

namespace detail {

inline QuadratureRule make_gauss_legendre(int n) {
  QuadratureRule rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    {
      // one more derivative evaluation at the converged root
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
    }
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.points[i] = -z;
    rule.points[n - 1 - i] = z;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

}  // namespace detail

/// Gauss-Legendre rule with n points, n in [1, 64]. Exact for polynomials of
/// degree 2n-1.
inline const QuadratureRule& gauss_legendre(int n) {
  static const std::array<QuadratureRule, kMaxGaussOrder + 1> table = [] {
    std::array<QuadratureRule, kMaxGaussOrder + 1> t;
    for (int k = 1; k <= kMaxGaussOrder; ++k) t[k] = detail::make_gauss_legendre(k);
    return t;
  }();
  if (n < 1 || n > kMaxGaussOrder)
    throw DomainError("Gauss order " + std::to_string(n) + " outside [1, 64]");
  return table[n];
}

/// Tuning of the distance-driven quadrature.
struct QuadraturePolicy {
  int min_order = 4;
  int max_order = 32;
  double order_scale = 8.0;
  /// Subdivide toward the target point while distance < near_ratio * size.
  double near_ratio = 0.5;
  /// Points per side for the Jacobian-vanishing transform at singular points.
  int singular_order = 20;
  /// Power of the transform; the Jacobian vanishes like tau^(power-1).
  int singular_power = 4;
  /// Points per direction on each degenerate triangle.
  int triangle_order = 12;
  int max_depth = 40;
};

/// Order heuristic: clamp(4 + ceil(8 * size / distance), 4, 32) by default.
inline int gauss_order(double size, double distance, const QuadraturePolicy& policy = {}) {
  if (!(distance > 0.0)) return policy.max_order;
  const double n = policy.min_order + std::ceil(policy.order_scale * size / distance);
  return static_cast<int>(std::clamp(n, double(policy.min_order), double(policy.max_order)));
}

/// One integration point of a one-dimensional parametric integral.
struct CurvePoint {
  double u;
  Vec2 x;
  Vec2 tangent;   // dx/du
  double weight;  // quadrature weight including |dx/du| and the parameter Jacobian
};

namespace detail {

inline double point_segment_distance(const Vec2& y, const Vec2& a, const Vec2& b, double& lambda) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  lambda = len2 > 0.0 ? std::clamp((y - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (a + lambda * ab - y).norm();
}

template <class CurveFn, class Visitor>
void emit_gauss(const CurveFn& curve, double a, double b, int n, Visitor& visit) {
  const QuadratureRule& rule = gauss_legendre(n);
  const double half = 0.5 * (b - a);
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double u = a + half * (1.0 + rule.points[i]);
    const auto [x, d] = curve(u);
    visit(CurvePoint{u, x, d, rule.weights[i] * half * d.norm()});
  }
}

/// Gauss rule on [a,b] after u = s + (e - s) * tau^m with the singular point s
/// at either end; the Jacobian vanishes at s.
template <class CurveFn, class Visitor>
void emit_singular(const CurveFn& curve, double singular, double other, int n, int power,
                   Visitor& visit) {
  const QuadratureRule& rule = gauss_legendre(n);
  const double len = other - singular;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double tau = 0.5 * (1.0 + rule.points[i]);
    const double u = singular + len * std::pow(tau, power);
    const double jac = 0.5 * std::abs(len) * power * std::pow(tau, power - 1);
    const auto [x, d] = curve(u);
    visit(CurvePoint{u, x, d, rule.weights[i] * jac * d.norm()});
  }
}

template <class CurveFn, class Visitor>
void adaptive_curve(const CurveFn& curve, double a, double b, const Vec2& y,
                    const QuadraturePolicy& policy, int depth, Visitor& visit) {
  constexpr int kSamples = 8;
  std::array<Vec2, kSamples + 1> pts;
  for (int i = 0; i <= kSamples; ++i) pts[i] = curve(a + (b - a) * i / kSamples).first;
  double length = 0.0;
  double dist = std::numeric_limits<double>::infinity();
  double closest = 0.5 * (a + b);
  for (int i = 0; i < kSamples; ++i) {
    length += (pts[i + 1] - pts[i]).norm();
    double lambda = 0.0;
    const double d = point_segment_distance(y, pts[i], pts[i + 1], lambda);
    if (d < dist) {
      dist = d;
      closest = a + (b - a) * (i + lambda) / kSamples;
    }
  }
  if (length <= 0.0) return;
  if (dist < policy.near_ratio * length && depth < policy.max_depth) {
    double split = closest;
    if (split - a < 0.1 * (b - a) || b - split < 0.1 * (b - a)) split = 0.5 * (a + b);
    adaptive_curve(curve, a, split, y, policy, depth + 1, visit);
    adaptive_curve(curve, split, b, y, policy, depth + 1, visit);
    return;
  }
  emit_gauss(curve, a, b, gauss_order(length, dist, policy), visit);
}

}  // namespace detail

/// Generates integration points on the parameter interval [a,b] of a curve
/// for an integrand that is singular or nearly singular at the target y.
///
/// `curve(u)` returns the pair (x(u), dx/du). When `singular_u` is given the
/// target lies on the curve at that parameter: the interval is split there
/// and each side uses the Jacobian-vanishing transform. Otherwise the interval
/// is subdivided toward the closest point until every piece is at least
/// `near_ratio` of its length away, and each piece gets a distance-driven
/// Gauss order.
template <class CurveFn, class Visitor>
void integrate_curve(const CurveFn& curve, double a, double b, const Vec2& y,
                     std::optional<double> singular_u, const QuadraturePolicy& policy,
                     Visitor&& visit) {
  if (!(b > a)) return;
  if (singular_u) {
    const double s = std::clamp(*singular_u, a, b);
    const double eps = 1e-14 * (b - a);
    if (s - a > eps) detail::emit_singular(curve, s, a, policy.singular_order, policy.singular_power, visit);
    if (b - s > eps) detail::emit_singular(curve, s, b, policy.singular_order, policy.singular_power, visit);
    return;
  }
  detail::adaptive_curve(curve, a, b, y, policy, 0, visit);
}

/// One integration point of an integral over a parameter rectangle.
struct AreaPoint {
  double s;
  double t;
  Vec2 x;
  double weight;  // includes the map determinant
};

/// Axis-aligned rectangle in the (s,t) parameter square.
struct ParamRect {
  double s0, s1, t0, t1;
  bool contains(double s, double t, double tol = 1e-12) const {
    return s >= s0 - tol && s <= s1 + tol && t >= t0 - tol && t <= t1 + tol;
  }
};

namespace detail {

template <class AreaMap, class Visitor>
void emit_tensor(const AreaMap& map, const ParamRect& r, int ns, int nt, Visitor& visit) {
  const QuadratureRule& rs = gauss_legendre(ns);
  const QuadratureRule& rt = gauss_legendre(nt);
  const double hs = 0.5 * (r.s1 - r.s0), ht = 0.5 * (r.t1 - r.t0);
  for (std::size_t j = 0; j < rt.size(); ++j) {
    const double t = r.t0 + ht * (1.0 + rt.points[j]);
    for (std::size_t i = 0; i < rs.size(); ++i) {
      const double s = r.s0 + hs * (1.0 + rs.points[i]);
      const auto [x, det] = map(s, t);
      visit(AreaPoint{s, t, x, rs.weights[i] * rt.weights[j] * hs * ht * det});
    }
  }
}

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Degenerate map of [-1,1]^2 onto the triangle (apex, c0, c1) with the
/// collapsed side at the apex and a quadratic grading toward it.
template <class AreaMap, class Visitor>
void emit_triangle(const AreaMap& map, const Vec2& apex, const Vec2& c0, const Vec2& c1, int n,
                   const QuadraturePolicy& policy, Visitor& visit) {
  const double base_len = (c1 - c0).norm();
  const double twice_area = std::abs(cross2(c1 - c0, c0 - apex));
  if (twice_area <= 1e-14 * base_len * base_len) return;
  // Along the base the integrand varies like 1/|base - apex|, so the order
  // follows the ratio of base length to triangle height.
  const QuadratureRule& radial = gauss_legendre(n);
  const QuadratureRule& angular =
      gauss_legendre(std::max(n, gauss_order(base_len, twice_area / base_len, policy)));
  for (std::size_t j = 0; j < radial.size(); ++j) {
    const double tau = 0.5 * (1.0 + radial.points[j]);
    const double rho = tau * tau;
    for (std::size_t i = 0; i < angular.size(); ++i) {
      const double lambda = 0.5 * (1.0 + angular.points[i]);
      const Vec2 base = c0 + lambda * (c1 - c0);
      const Vec2 p = apex + rho * (base - apex);
      const auto [x, det] = map(p.x(), p.y());
      // d(lambda)/d(xi) = 1/2, d(rho)/d(eta) = tau, area factor rho * 2A
      const double w = angular.weights[i] * radial.weights[j] * 0.5 * tau * rho * twice_area;
      visit(AreaPoint{p.x(), p.y(), x, w * det});
    }
  }
}

template <class AreaMap>
void rect_extent(const AreaMap& map, const ParamRect& r, double& ls, double& lt, double& diam) {
  const double sm = 0.5 * (r.s0 + r.s1), tm = 0.5 * (r.t0 + r.t1);
  ls = (map(r.s1, tm).first - map(r.s0, tm).first).norm();
  lt = (map(sm, r.t1).first - map(sm, r.t0).first).norm();
  const Vec2 a = map(r.s0, r.t0).first, b = map(r.s1, r.t0).first;
  const Vec2 c = map(r.s1, r.t1).first, d = map(r.s0, r.t1).first;
  diam = std::max({(c - a).norm(), (d - b).norm(), ls, lt});
}

template <class AreaMap>
double rect_distance(const AreaMap& map, const ParamRect& r, const Vec2& y) {
  constexpr int k = 4;
  double dist = std::numeric_limits<double>::infinity();
  auto edge = [&](double sa, double ta, double sb, double tb) {
    Vec2 prev = map(sa, ta).first;
    for (int i = 1; i <= k; ++i) {
      const double f = double(i) / k;
      const Vec2 cur = map(sa + f * (sb - sa), ta + f * (tb - ta)).first;
      double lambda = 0.0;
      dist = std::min(dist, point_segment_distance(y, prev, cur, lambda));
      prev = cur;
    }
  };
  edge(r.s0, r.t0, r.s1, r.t0);
  edge(r.s1, r.t0, r.s1, r.t1);
  edge(r.s1, r.t1, r.s0, r.t1);
  edge(r.s0, r.t1, r.s0, r.t0);
  return dist;
}

template <class AreaMap, class Visitor>
void adaptive_rect(const AreaMap& map, const ParamRect& r, const Vec2& y,
                   const QuadraturePolicy& policy, int depth, Visitor& visit) {
  double ls = 0.0, lt = 0.0, diam = 0.0;
  rect_extent(map, r, ls, lt, diam);
  const double dist = rect_distance(map, r, y);
  if (dist < policy.near_ratio * diam && depth < policy.max_depth) {
    const double sm = 0.5 * (r.s0 + r.s1), tm = 0.5 * (r.t0 + r.t1);
    if (ls > 2.0 * lt) {
      adaptive_rect(map, {r.s0, sm, r.t0, r.t1}, y, policy, depth + 1, visit);
      adaptive_rect(map, {sm, r.s1, r.t0, r.t1}, y, policy, depth + 1, visit);
    } else if (lt > 2.0 * ls) {
      adaptive_rect(map, {r.s0, r.s1, r.t0, tm}, y, policy, depth + 1, visit);
      adaptive_rect(map, {r.s0, r.s1, tm, r.t1}, y, policy, depth + 1, visit);
    } else {
      adaptive_rect(map, {r.s0, sm, r.t0, tm}, y, policy, depth + 1, visit);
      adaptive_rect(map, {sm, r.s1, r.t0, tm}, y, policy, depth + 1, visit);
      adaptive_rect(map, {r.s0, sm, tm, r.t1}, y, policy, depth + 1, visit);
      adaptive_rect(map, {sm, r.s1, tm, r.t1}, y, policy, depth + 1, visit);
    }
    return;
  }
  emit_tensor(map, r, gauss_order(ls, dist, policy), gauss_order(lt, dist, policy), visit);
}

}  // namespace detail

/// Splits the rectangle into two, three or four triangles with a common apex
/// at (s, t), depending on whether the apex is a corner, on an edge or inside,
/// and integrates each with the degenerate map whose Jacobian vanishes at the
/// apex. Returns the number of nondegenerate triangles.
template <class AreaMap, class Visitor>
int integrate_rect_triangles(const AreaMap& map, const ParamRect& r, double s, double t,
                             int order, Visitor&& visit, const QuadraturePolicy& policy = {}) {
  const Vec2 apex(std::clamp(s, r.s0, r.s1), std::clamp(t, r.t0, r.t1));
  const std::array<Vec2, 4> c = {Vec2(r.s0, r.t0), Vec2(r.s1, r.t0), Vec2(r.s1, r.t1),
                                 Vec2(r.s0, r.t1)};
  int used = 0;
  for (int k = 0; k < 4; ++k) {
    const Vec2& a = c[k];
    const Vec2& b = c[(k + 1) % 4];
    const double twice_area = std::abs(detail::cross2(b - a, a - apex));
    if (twice_area <= 1e-12 * (b - a).squaredNorm()) continue;
    detail::emit_triangle(map, apex, a, b, order, policy, visit);
    ++used;
  }
  return used;
}

/// Generates integration points over a parameter rectangle for an integrand
/// singular at the physical point y. `map(s,t)` returns (x(s,t), det J).
/// When `singular_st` is inside the rectangle the triangle scheme is used;
/// otherwise the rectangle is subdivided toward y as in `integrate_curve`.
template <class AreaMap, class Visitor>
void integrate_rect(const AreaMap& map, const ParamRect& r, const Vec2& y,
                    const std::optional<Vec2>& singular_st, const QuadraturePolicy& policy,
                    Visitor&& visit) {
  if (!(r.s1 > r.s0) || !(r.t1 > r.t0)) return;
  if (singular_st && r.contains(singular_st->x(), singular_st->y(), 1e-10)) {
    integrate_rect_triangles(map, r, singular_st->x(), singular_st->y(), policy.triangle_order,
                             visit, policy);
    return;
  }
  detail::adaptive_rect(map, r, y, policy, 0, visit);
}

}  // namespace igabem
