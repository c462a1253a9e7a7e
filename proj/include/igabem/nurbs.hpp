#pragma once

// Rational B-spline bases and curves on the normalized parameter interval [0,1].

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "igabem/errors.hpp"

namespace igabem {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Highest supported polynomial order (degree + 1).
inline constexpr int kMaxOrder = 8;

/// Tolerance used when snapping parameters onto [0,1].
inline constexpr double kParamTol = 1e-12;

/// Values and first derivatives of the p+1 basis functions that are
/// nonzero on the knot span containing a parameter.
struct BasisValues {
  int first = 0;  // global index of value[0]
  int count = 0;
  std::array<double, kMaxOrder> value{};
  std::array<double, kMaxOrder> deriv{};
};

/// Clamped NURBS basis. Knots are normalized to [0,1] on construction and
/// weights default to one.
class NurbsBasis {
 public:
  NurbsBasis() = default;

  NurbsBasis(int degree, std::vector<double> knots, std::vector<double> weights = {})
      : degree_(degree), knots_(std::move(knots)), weights_(std::move(weights)) {
    if (degree_ < 0 || degree_ >= kMaxOrder)
      throw ModelError("NURBS degree must be in [0, " + std::to_string(kMaxOrder - 1) + "]");
    const auto nk = static_cast<int>(knots_.size());
    if (nk < 2 * (degree_ + 1))
      throw ModelError("knot vector too short for degree " + std::to_string(degree_));
    const int n = nk - degree_ - 1;
    if (weights_.empty()) weights_.assign(static_cast<std::size_t>(n), 1.0);
    if (static_cast<int>(weights_.size()) != n)
      throw ModelError("knot count " + std::to_string(nk) + " does not match " +
                       std::to_string(weights_.size()) + " weights + degree " +
                       std::to_string(degree_) + " + 1");
    for (int i = 1; i < nk; ++i)
      if (knots_[i] < knots_[i - 1]) throw ModelError("knot vector is not non-decreasing");
    const double lo = knots_.front();
    const double hi = knots_.back();
    if (!(hi > lo)) throw ModelError("knot vector has zero length");
    for (int i = 0; i <= degree_; ++i) {
      if (knots_[i] != lo || knots_[nk - 1 - i] != hi)
        throw ModelError("knot vector is not clamped (end knots need multiplicity degree+1)");
    }
    for (double& k : knots_) k = (k - lo) / (hi - lo);
    for (double w : weights_)
      if (!(w > 0.0)) throw ModelError("NURBS weights must be positive");
    rational_ = std::any_of(weights_.begin(), weights_.end(),
                            [&](double w) { return w != weights_.front(); });
  }

  int degree() const { return degree_; }
  std::size_t size() const { return weights_.size(); }
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& weights() const { return weights_; }
  bool is_rational() const { return rational_; }

  /// Knot span index i with knots[i] <= u < knots[i+1]; u = 1 maps to the last
  /// nonempty span.
  int find_span(double u) const {
    u = check_param(u);
    const int n = static_cast<int>(size());
    if (u >= knots_[n]) return n - 1;
    auto it = std::upper_bound(knots_.begin() + degree_, knots_.begin() + n + 1, u);
    return static_cast<int>(it - knots_.begin()) - 1;
  }

  /// Cox-de Boor evaluation of the nonzero rational basis functions and their
  /// first derivatives.
  BasisValues evaluate(double u) const {
    u = check_param(u);
    const int p = degree_;
    const int span = find_span(u);
    BasisValues out;
    out.first = span - p;
    out.count = p + 1;

    // ndu[r][j] (r <= j): N_{span-j+r, j}; ndu[j][r] (j > r): knot differences.
    std::array<std::array<double, kMaxOrder>, kMaxOrder> ndu{};
    std::array<double, kMaxOrder> left{}, right{};
    ndu[0][0] = 1.0;
    for (int j = 1; j <= p; ++j) {
      left[j] = u - knots_[span + 1 - j];
      right[j] = knots_[span + j] - u;
      double saved = 0.0;
      for (int r = 0; r < j; ++r) {
        ndu[j][r] = right[r + 1] + left[j - r];
        const double temp = ndu[r][j - 1] / ndu[j][r];
        ndu[r][j] = saved + right[r + 1] * temp;
        saved = left[j - r] * temp;
      }
      ndu[j][j] = saved;
    }

    std::array<double, kMaxOrder> n{}, dn{};
    for (int r = 0; r <= p; ++r) n[r] = ndu[r][p];
    if (p > 0) {
      for (int r = 0; r <= p; ++r) {
        double d = 0.0;
        if (r >= 1) {
          const double den = knots_[span + r] - knots_[span - p + r];
          if (den > 0.0) d += ndu[r - 1][p - 1] / den;
        }
        if (r <= p - 1) {
          const double den = knots_[span + r + 1] - knots_[span - p + r + 1];
          if (den > 0.0) d -= ndu[r][p - 1] / den;
        }
        dn[r] = p * d;
      }
    }

    double w = 0.0, dw = 0.0;
    for (int r = 0; r <= p; ++r) {
      const double wr = weights_[span - p + r];
      w += n[r] * wr;
      dw += dn[r] * wr;
    }
    for (int r = 0; r <= p; ++r) {
      const double wr = weights_[span - p + r];
      out.value[r] = n[r] * wr / w;
      out.deriv[r] = (dn[r] * wr - out.value[r] * dw) / w;
    }
    return out;
  }

  /// Value of basis function k at u.
  double value(std::size_t k, double u) const {
    const BasisValues b = evaluate(u);
    const int idx = static_cast<int>(k) - b.first;
    return (idx >= 0 && idx < b.count) ? b.value[idx] : 0.0;
  }

  /// Greville abscissae (knot averages), one per basis function.
  std::vector<double> greville() const {
    std::vector<double> g(size());
    for (std::size_t i = 0; i < size(); ++i) {
      if (degree_ == 0) {
        g[i] = 0.5 * (knots_[i] + knots_[i + 1]);
        continue;
      }
      double s = 0.0;
      for (int j = 1; j <= degree_; ++j) s += knots_[i + j];
      g[i] = s / degree_;
    }
    return g;
  }

  /// Distinct knot values, i.e. the boundaries of the nonempty spans.
  std::vector<double> breakpoints() const {
    std::vector<double> b;
    for (double k : knots_)
      if (b.empty() || k > b.back()) b.push_back(k);
    return b;
  }

  /// Degree elevation by one. Every distinct knot gains one multiplicity, so
  /// continuity is preserved; for rational bases the weight function is
  /// reproduced exactly so the elevated space contains the original one.
  NurbsBasis elevated() const {
    std::vector<double> knots;
    for (std::size_t i = 0; i < knots_.size(); ++i) {
      knots.push_back(knots_[i]);
      if (i + 1 == knots_.size() || knots_[i + 1] != knots_[i]) knots.push_back(knots_[i]);
    }
    NurbsBasis poly(degree_ + 1, knots);
    if (!rational_) {
      std::vector<double> w(poly.size(), weights_.front());
      return NurbsBasis(degree_ + 1, std::move(knots), std::move(w));
    }
    const auto g = poly.greville();
    const auto m = static_cast<Eigen::Index>(poly.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const BasisValues b = poly.evaluate(g[i]);
      for (int r = 0; r < b.count; ++r) a(i, b.first + r) = b.value[r];
      rhs(i) = weight_function(g[i]);
    }
    const Eigen::VectorXd w = a.partialPivLu().solve(rhs);
    return NurbsBasis(degree_ + 1, std::move(knots), std::vector<double>(w.data(), w.data() + m));
  }

  /// Denominator W(u) = sum_k N_k(u) w_k.
  double weight_function(double u) const {
    NurbsBasis poly(degree_, knots_);
    const BasisValues b = poly.evaluate(u);
    double w = 0.0;
    for (int r = 0; r < b.count; ++r) w += b.value[r] * weights_[b.first + r];
    return w;
  }

 private:
  static double check_param(double u) {
    if (!(u >= -kParamTol && u <= 1.0 + kParamTol))
      throw DomainError("parameter " + std::to_string(u) + " outside [0,1]");
    return std::clamp(u, 0.0, 1.0);
  }

  int degree_ = 0;
  std::vector<double> knots_;
  std::vector<double> weights_;
  bool rational_ = false;
};

/// Planar NURBS curve x(u) = sum_k R_k(u) P_k.
class NurbsCurve {
 public:
  NurbsCurve() = default;

  NurbsCurve(NurbsBasis basis, std::vector<Vec2> control_points)
      : basis_(std::move(basis)), points_(std::move(control_points)) {
    if (points_.size() != basis_.size())
      throw ModelError("control point count " + std::to_string(points_.size()) +
                       " does not match basis size " + std::to_string(basis_.size()));
  }

  NurbsCurve(int degree, std::vector<double> knots, std::vector<Vec2> control_points,
             std::vector<double> weights = {})
      : NurbsCurve(NurbsBasis(degree, std::move(knots), std::move(weights)),
                   std::move(control_points)) {}

  const NurbsBasis& basis() const { return basis_; }
  const std::vector<Vec2>& control_points() const { return points_; }
  int degree() const { return basis_.degree(); }

  Vec2 evaluate(double u) const {
    const BasisValues b = basis_.evaluate(u);
    Vec2 x = Vec2::Zero();
    for (int r = 0; r < b.count; ++r) x += b.value[r] * points_[b.first + r];
    return x;
  }

  /// Parametric tangent dx/du.
  Vec2 derivative(double u) const {
    const BasisValues b = basis_.evaluate(u);
    Vec2 d = Vec2::Zero();
    for (int r = 0; r < b.count; ++r) d += b.deriv[r] * points_[b.first + r];
    return d;
  }

  /// Point and tangent in one basis evaluation.
  std::pair<Vec2, Vec2> evaluate_with_derivative(double u) const {
    const BasisValues b = basis_.evaluate(u);
    Vec2 x = Vec2::Zero(), d = Vec2::Zero();
    for (int r = 0; r < b.count; ++r) {
      x += b.value[r] * points_[b.first + r];
      d += b.deriv[r] * points_[b.first + r];
    }
    return {x, d};
  }

 private:
  NurbsBasis basis_;
  std::vector<Vec2> points_;
};

}  // namespace igabem
