#pragma once

// Inclusion geometry: two NURBS curves joined by straight edges,
// x(s,t) = (1 - t) x_I(s) + t x_II(s) on the unit square.

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "igabem/errors.hpp"
#include "igabem/material.hpp"
#include "igabem/nurbs.hpp"
#include "igabem/quadrature.hpp"

namespace igabem {

/// Pieces of the inclusion boundary in counterclockwise loop order.
enum class InclusionSegment { curve_I = 0, edge_2 = 1, curve_II = 2, edge_1 = 3 };

inline constexpr std::array<InclusionSegment, 4> kInclusionSegments = {
    InclusionSegment::curve_I, InclusionSegment::edge_2, InclusionSegment::curve_II,
    InclusionSegment::edge_1};

inline const char* segment_name(InclusionSegment s) {
  switch (s) {
    case InclusionSegment::curve_I: return "curve_I";
    case InclusionSegment::edge_2: return "edge_2";
    case InclusionSegment::curve_II: return "curve_II";
    case InclusionSegment::edge_1: return "edge_1";
  }
  return "?";
}

/// Point on the inclusion boundary with its outward unit normal and the
/// arc-length Jacobian dS/dxi for xi in [-1,1].
struct BoundaryTrace {
  Vec2 point;
  Vec2 normal;
  double jacobian;
};

/// Where a physical point sits relative to an inclusion.
struct InclusionLocation {
  Vec2 st;            // closest parameters, clamped to the unit square
  double distance;    // distance from the mapped closest point
  bool inside;        // within the closed inclusion (distance ~ 0)
};

class Inclusion {
 public:
  Inclusion() = default;

  /// Curves whose blend has negative orientation are swapped so that the
  /// map Jacobian is positive; `swapped()` reports this.
  Inclusion(std::string name, NurbsCurve curve_I, NurbsCurve curve_II, IsotropicMaterial material,
            YieldModel yield = {}, int n_s = 20, int n_t = 5)
      : name_(std::move(name)),
        curve_I_(std::move(curve_I)),
        curve_II_(std::move(curve_II)),
        material_(material),
        yield_(yield),
        n_s_(n_s),
        n_t_(n_t) {
    material_.validate();
    yield_.validate();
    if (n_s_ < 2 || n_t_ < 2) throw ModelError("inclusion grid needs at least 2x2 nodes");
    check_orientation();
  }

  const std::string& name() const { return name_; }
  const NurbsCurve& curve_I() const { return curve_I_; }
  const NurbsCurve& curve_II() const { return curve_II_; }
  const IsotropicMaterial& material() const { return material_; }
  const YieldModel& yield() const { return yield_; }
  YieldModel& yield() { return yield_; }
  int grid_s() const { return n_s_; }
  int grid_t() const { return n_t_; }
  void set_grid(int n_s, int n_t) {
    if (n_s < 2 || n_t < 2) throw ModelError("inclusion grid needs at least 2x2 nodes");
    n_s_ = n_s;
    n_t_ = n_t;
  }
  bool swapped() const { return swapped_; }

  Vec2 map(double s, double t) const {
    check_unit(s, t);
    return (1.0 - t) * curve_I_.evaluate(s) + t * curve_II_.evaluate(s);
  }

  /// Rows are dx/ds and dx/dt; no sign check.
  Mat2 jacobian_matrix(double s, double t) const {
    check_unit(s, t);
    const auto [a, da] = curve_I_.evaluate_with_derivative(s);
    const auto [b, db] = curve_II_.evaluate_with_derivative(s);
    Mat2 j;
    j.row(0) = ((1.0 - t) * da + t * db).transpose();
    j.row(1) = (b - a).transpose();
    return j;
  }

  /// Jacobian matrix and determinant; throws when the map degenerates.
  std::pair<Mat2, double> jacobian(double s, double t) const {
    const Mat2 j = jacobian_matrix(s, t);
    const double det = j.determinant();
    if (!(det > 0.0))
      throw ModelError("inclusion '" + name_ + "' map degenerates at (s,t) = (" +
                       std::to_string(s) + ", " + std::to_string(t) + ")");
    return {j, det};
  }

  /// Point and determinant, the form expected by `integrate_rect`.
  std::pair<Vec2, double> map_with_det(double s, double t) const {
    const auto [a, da] = curve_I_.evaluate_with_derivative(s);
    const auto [b, db] = curve_II_.evaluate_with_derivative(s);
    const Vec2 ds = (1.0 - t) * da + t * db;
    const Vec2 dt = b - a;
    return {(1.0 - t) * a + t * b, ds.x() * dt.y() - ds.y() * dt.x()};
  }

  /// Point and loop-direction derivative d x / d u of a boundary segment,
  /// u in [0,1].
  std::pair<Vec2, Vec2> segment_point(InclusionSegment seg, double u) const {
    switch (seg) {
      case InclusionSegment::curve_I:
        return curve_I_.evaluate_with_derivative(u);
      case InclusionSegment::edge_2: {
        const Vec2 a = curve_I_.evaluate(1.0), b = curve_II_.evaluate(1.0);
        return {(1.0 - u) * a + u * b, b - a};
      }
      case InclusionSegment::curve_II: {
        const auto [x, d] = curve_II_.evaluate_with_derivative(1.0 - u);
        return {x, -d};
      }
      case InclusionSegment::edge_1: {
        const Vec2 a = curve_II_.evaluate(0.0), b = curve_I_.evaluate(0.0);
        return {(1.0 - u) * a + u * b, b - a};
      }
    }
    return {};
  }

  /// (s,t) of a segment parameter.
  static Vec2 segment_to_st(InclusionSegment seg, double u) {
    switch (seg) {
      case InclusionSegment::curve_I: return {u, 0.0};
      case InclusionSegment::edge_2: return {1.0, u};
      case InclusionSegment::curve_II: return {1.0 - u, 1.0};
      case InclusionSegment::edge_1: return {0.0, 1.0 - u};
    }
    return {};
  }

  /// Knot breakpoints of a segment in its loop parameter.
  std::vector<double> segment_breakpoints(InclusionSegment seg) const {
    switch (seg) {
      case InclusionSegment::curve_I:
        return curve_I_.basis().breakpoints();
      case InclusionSegment::curve_II: {
        std::vector<double> b = curve_II_.basis().breakpoints();
        for (double& v : b) v = 1.0 - v;
        std::reverse(b.begin(), b.end());
        return b;
      }
      default:
        return {0.0, 1.0};
    }
  }

  /// Straight edges whose end points coincide have zero length and are skipped.
  bool segment_degenerate(InclusionSegment seg) const {
    if (seg == InclusionSegment::edge_2)
      return (curve_II_.evaluate(1.0) - curve_I_.evaluate(1.0)).norm() <= 1e-14 * scale();
    if (seg == InclusionSegment::edge_1)
      return (curve_II_.evaluate(0.0) - curve_I_.evaluate(0.0)).norm() <= 1e-14 * scale();
    return false;
  }

  /// Boundary point, outward normal and dS/dxi for xi in [-1,1] along a segment.
  BoundaryTrace boundary_trace(InclusionSegment seg, double xi) const {
    if (!(xi >= -1.0 - kParamTol && xi <= 1.0 + kParamTol))
      throw DomainError("boundary coordinate outside [-1,1]");
    const double u = std::clamp(0.5 * (1.0 + xi), 0.0, 1.0);
    const auto [x, d] = segment_point(seg, u);
    const double len = d.norm();
    const Vec2 n = len > 0.0 ? Vec2(d.y() / len, -d.x() / len) : Vec2::Zero();
    return {x, n, 0.5 * len};
  }

  /// Closest parameters of a physical point. Newton iteration on the map from
  /// the best sample of a coarse grid, with the result clamped to the square.
  InclusionLocation locate(const Vec2& x) const {
    constexpr int k = 16;
    double best = std::numeric_limits<double>::infinity();
    Vec2 st(0.5, 0.5);
    for (int j = 0; j <= k; ++j) {
      for (int i = 0; i <= k; ++i) {
        const double s = double(i) / k, t = double(j) / k;
        const double d = (map(s, t) - x).squaredNorm();
        if (d < best) {
          best = d;
          st = Vec2(s, t);
        }
      }
    }
    for (int it = 0; it < 50; ++it) {
      const auto [p, det] = map_with_det(st.x(), st.y());
      const Vec2 r = p - x;
      const Mat2 j = jacobian_matrix(st.x(), st.y());
      Vec2 step;
      if (std::abs(det) > 1e-300) {
        step = j.transpose().partialPivLu().solve(r);
      } else {
        step = j.transpose().completeOrthogonalDecomposition().solve(r);
      }
      Vec2 next = st - step;
      next = next.cwiseMax(0.0).cwiseMin(1.0);
      // clamped components are refined by projection along the free one
      const double move = (next - st).norm();
      st = next;
      if (move < 1e-15) break;
    }
    // projection onto the boundary when the point lies outside
    if ((map(st.x(), st.y()) - x).norm() > 1e-12 * scale()) st = project_to_boundary(x, st);
    const double dist = (map(st.x(), st.y()) - x).norm();
    return {st, dist, dist <= 1e-10 * scale()};
  }

  /// Area of the inclusion by Gauss quadrature of the map determinant.
  double area() const {
    double a = 0.0;
    const auto s_breaks = merged_breakpoints();
    const QuadratureRule& rule = gauss_legendre(16);
    for (std::size_t k = 0; k + 1 < s_breaks.size(); ++k) {
      const double s0 = s_breaks[k], s1 = s_breaks[k + 1];
      for (std::size_t i = 0; i < rule.size(); ++i) {
        const double s = s0 + 0.5 * (s1 - s0) * (1.0 + rule.points[i]);
        for (std::size_t j = 0; j < rule.size(); ++j) {
          const double t = 0.5 * (1.0 + rule.points[j]);
          a += rule.weights[i] * rule.weights[j] * 0.25 * (s1 - s0) * map_with_det(s, t).second;
        }
      }
    }
    return a;
  }

  /// Union of the knot breakpoints of both curves in s.
  std::vector<double> merged_breakpoints() const {
    std::vector<double> b = curve_I_.basis().breakpoints();
    for (double v : curve_II_.basis().breakpoints()) b.push_back(v);
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end(), [](double x, double y) { return std::abs(x - y) < 1e-14; }),
            b.end());
    return b;
  }

  /// Characteristic size used for relative tolerances.
  double scale() const {
    const Vec2 a = curve_I_.evaluate(0.0), b = curve_I_.evaluate(1.0);
    const Vec2 c = curve_II_.evaluate(0.0), d = curve_II_.evaluate(1.0);
    return std::max({(a - d).norm(), (b - c).norm(), (a - b).norm(), (c - d).norm(), 1e-300});
  }

 private:
  static void check_unit(double s, double t) {
    if (!(s >= -kParamTol && s <= 1.0 + kParamTol && t >= -kParamTol && t <= 1.0 + kParamTol))
      throw DomainError("inclusion coordinates outside the unit square");
  }

  void check_orientation() {
    const int ks = std::max(4 * n_s_, 41), kt = std::max(2 * n_t_, 11);
    int pos = 0, neg = 0;
    double max_abs = 0.0;
    std::vector<double> dets;
    for (int j = 0; j < kt; ++j) {
      for (int i = 0; i < ks; ++i) {
        const double s = (i + 0.5) / ks, t = (j + 0.5) / kt;
        const double det = map_with_det(s, t).second;
        dets.push_back(det);
        max_abs = std::max(max_abs, std::abs(det));
      }
    }
    for (double d : dets) {
      if (d > 1e-12 * max_abs) ++pos;
      else if (d < -1e-12 * max_abs) ++neg;
    }
    if (pos == 0 && neg == 0) throw ModelError("inclusion '" + name_ + "' has zero area");
    if (pos > 0 && neg > 0)
      throw ModelError("inclusion '" + name_ + "' map folds over (Jacobian changes sign)");
    if (pos + neg < static_cast<int>(dets.size()))
      throw ModelError("inclusion '" + name_ + "' map degenerates inside the unit square");
    if (neg > 0) {
      std::swap(curve_I_, curve_II_);
      swapped_ = true;
    }
  }

  Vec2 project_to_boundary(const Vec2& x, const Vec2& start) const {
    Vec2 best_st = start;
    double best = (map(start.x(), start.y()) - x).norm();
    for (InclusionSegment seg : kInclusionSegments) {
      if (segment_degenerate(seg)) continue;
      constexpr int k = 64;
      double u_best = 0.0, d_best = std::numeric_limits<double>::infinity();
      for (int i = 0; i <= k; ++i) {
        const double u = double(i) / k;
        const double d = (segment_point(seg, u).first - x).norm();
        if (d < d_best) {
          d_best = d;
          u_best = u;
        }
      }
      // Newton on the squared distance along the segment
      double u = u_best;
      for (int it = 0; it < 40; ++it) {
        const auto [p, dp] = segment_point(seg, u);
        const double h = 1e-7;
        const Vec2 dp2 = (segment_point(seg, std::min(1.0, u + h)).second -
                          segment_point(seg, std::max(0.0, u - h)).second) /
                         (std::min(1.0, u + h) - std::max(0.0, u - h));
        const double g = (p - x).dot(dp);
        const double hess = dp.squaredNorm() + (p - x).dot(dp2);
        if (!(hess > 0.0)) break;
        const double next = std::clamp(u - g / hess, 0.0, 1.0);
        if (std::abs(next - u) < 1e-15) {
          u = next;
          break;
        }
        u = next;
      }
      const double d = (segment_point(seg, u).first - x).norm();
      if (d < best) {
        best = d;
        best_st = segment_to_st(seg, u);
      }
    }
    return best_st;
  }

  std::string name_;
  NurbsCurve curve_I_;
  NurbsCurve curve_II_;
  IsotropicMaterial material_;
  YieldModel yield_;
  int n_s_ = 20;
  int n_t_ = 5;
  bool swapped_ = false;
};

}  // namespace igabem
