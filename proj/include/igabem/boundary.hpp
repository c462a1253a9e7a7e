#pragma once

// Outer boundary S: NURBS patches with a separate field basis, collocation
// points, kernel integrals and the collocation system for mixed boundary
// conditions.
//
// Displacements are continuous: the end coefficients of neighbouring patches
// are one shared unknown. Tractions are patch-local. Every basis function of
// the displacement field contributes one collocation point at its Greville
// abscissa.

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "igabem/errors.hpp"
#include "igabem/kernels.hpp"
#include "igabem/material.hpp"
#include "igabem/nurbs.hpp"
#include "igabem/quadrature.hpp"

namespace igabem {

enum class BcType { traction, displacement };

/// Condition for one displacement/traction component on a patch. `values`
/// are coefficients of the patch field basis; empty means zero.
struct DirectionCondition {
  BcType type = BcType::traction;
  std::vector<double> values;

  double value(std::size_t k) const { return values.empty() ? 0.0 : values[k]; }
};

struct Patch {
  std::string name;
  NurbsCurve geometry;
  /// Basis for displacements and tractions.
  NurbsBasis field;
  std::array<DirectionCondition, 2> bc;
  /// Additional prescribed traction sigma . n on traction components, from a
  /// constant stress state (e.g. an excavation load -sigma_v . n).
  std::optional<Voigt> stress_load;

  /// Unit normal (t_y, -t_x) / |t|.
  static Vec2 normal_of(const Vec2& tangent) {
    const double len = tangent.norm();
    return Vec2(tangent.y() / len, -tangent.x() / len);
  }

  std::vector<double> breakpoints() const {
    std::vector<double> b = geometry.basis().breakpoints();
    for (double v : field.breakpoints()) b.push_back(v);
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end(), [](double x, double y) { return std::abs(x - y) < 1e-14; }), b.end());
    return b;
  }
};

enum class DomainKind { finite, infinite };

struct CollocationPoint {
  Vec2 y = Vec2::Zero();
  /// Patches through the point and the point's parameter on each.
  std::vector<std::pair<int, double>> on;
  /// u(y) = sum of weight * coefficient over (global point, weight).
  std::vector<std::pair<int, double>> combination;
  std::array<bool, 2> restrained{false, false};
  std::array<double, 2> value{0.0, 0.0};
};

/// Displacement coefficients (2 per global point) and traction coefficients
/// (2 per patch basis function).
struct BoundarySolution {
  Eigen::VectorXd u;
  Eigen::VectorXd t;
};

/// Linear map from a boundary solution to a kernel integral at a target:
///   value = t_part * t + load - u_part * u.
template <int Rows>
struct BoundaryOperator {
  using Matrix = Eigen::Matrix<double, Rows, Eigen::Dynamic>;
  Matrix u_part;
  Matrix t_part;
  Eigen::Matrix<double, Rows, 1> load = Eigen::Matrix<double, Rows, 1>::Zero();

  Eigen::Matrix<double, Rows, 1> apply(const BoundarySolution& s) const { return t_part * s.t + load - u_part * s.u; }
};

class BoundaryModel {
 public:
  BoundaryModel() = default;

  BoundaryModel(std::vector<Patch> patches, DomainKind domain, IsotropicMaterial material,
                QuadraturePolicy policy = {})
      : patches_(std::move(patches)), domain_(domain), material_(material), kernels_(material), policy_(policy) {
    if (patches_.empty()) throw ModelError("boundary has no patches");
    validate_patches();
    build_points();
    check_orientation();
    build_traction_layout();
  }

  const std::vector<Patch>& patches() const { return patches_; }
  DomainKind domain() const { return domain_; }
  const IsotropicMaterial& material() const { return material_; }
  const Kernels& kernels() const { return kernels_; }
  const QuadraturePolicy& policy() const { return policy_; }
  const std::vector<CollocationPoint>& points() const { return points_; }
  std::size_t point_count() const { return points_.size(); }
  /// Global point of basis function k of patch p.
  int point_of(int p, int k) const { return patch_points_[p][k]; }
  /// Offset of patch p in the traction coefficient list (per basis function).
  int traction_offset(int p) const { return traction_offset_[p]; }
  std::size_t traction_count() const { return traction_total_; }
  double scale() const { return scale_; }

  /// Boundary solution with prescribed coefficients filled in and unknowns zero.
  BoundarySolution prescribed() const {
    BoundarySolution s{Eigen::VectorXd::Zero(2 * point_count()), Eigen::VectorXd::Zero(2 * traction_count())};
    for (std::size_t n = 0; n < points_.size(); ++n)
      for (int d = 0; d < 2; ++d)
        if (points_[n].restrained[d]) s.u(2 * n + d) = points_[n].value[d];
    for (std::size_t p = 0; p < patches_.size(); ++p)
      for (int d = 0; d < 2; ++d)
        if (patches_[p].bc[d].type == BcType::traction)
          for (std::size_t k = 0; k < patches_[p].field.size(); ++k)
            s.t(2 * (traction_offset_[p] + k) + d) = patches_[p].bc[d].value(k);
    return s;
  }

  /// Displacement at a collocation point.
  Vec2 point_displacement(const BoundarySolution& s, std::size_t n) const {
    Vec2 v = Vec2::Zero();
    for (const auto& [g, w] : points_[n].combination) v += w * s.u.segment<2>(2 * g);
    return v;
  }

  /// Displacement and traction on patch p at parameter u, with the point and
  /// outward normal.
  /// `slope` is the displacement derivative along the unit tangent.
  struct BoundarySample {
    Vec2 x, normal, displacement, traction;
    Vec2 tangent = Vec2::Zero(), slope = Vec2::Zero();
  };
  BoundarySample sample(const BoundarySolution& s, int p, double u) const {
    const Patch& pt = patches_[p];
    const auto [x, d] = pt.geometry.evaluate_with_derivative(u);
    BoundarySample out{x, Patch::normal_of(d), Vec2::Zero(), Vec2::Zero()};
    const double speed = d.norm();
    out.tangent = d / speed;
    const BasisValues b = pt.field.evaluate(u);
    for (int r = 0; r < b.count; ++r) {
      const int k = b.first + r;
      out.displacement += b.value[r] * s.u.segment<2>(2 * point_of(p, k));
      out.slope += (b.deriv[r] / speed) * s.u.segment<2>(2 * point_of(p, k));
      out.traction += b.value[r] * s.t.segment<2>(2 * (traction_offset_[p] + k));
    }
    if (pt.stress_load) {
      const Vec2 tl = stress_traction(*pt.stress_load, out.normal);
      for (int c = 0; c < 2; ++c)
        if (pt.bc[c].type == BcType::traction) out.traction(c) += tl(c);
    }
    return out;
  }

  /// Kernel integrals over S at target y. `first(y, x)` multiplies tractions
  /// (U or S), `second(y, x, n)` multiplies displacements (T or R). `on` lists
  /// the patches through y with its parameter; those spans get the singular
  /// transform.
  template <int Rows, class First, class Second>
  BoundaryOperator<Rows> boundary_operator(const Vec2& y, const std::vector<std::pair<int, double>>& on,
                                           const First& first, const Second& second) const {
    using Block = Eigen::Matrix<double, Rows, 2>;
    BoundaryOperator<Rows> op;
    op.u_part = BoundaryOperator<Rows>::Matrix::Zero(Rows, 2 * static_cast<Eigen::Index>(point_count()));
    op.t_part = BoundaryOperator<Rows>::Matrix::Zero(Rows, 2 * static_cast<Eigen::Index>(traction_count()));
    for (std::size_t p = 0; p < patches_.size(); ++p) {
      const Patch& pt = patches_[p];
      std::optional<double> su;
      for (const auto& [q, u] : on)
        if (q == static_cast<int>(p)) su = u;
      const std::vector<double> br = pt.breakpoints();
      auto curve = [&](double u) { return pt.geometry.evaluate_with_derivative(u); };
      for (std::size_t k = 0; k + 1 < br.size(); ++k) {
        const double a = br[k], b = br[k + 1];
        std::optional<double> sing;
        if (su && *su >= a - 1e-12 && *su <= b + 1e-12) sing = *su;
        integrate_curve(curve, a, b, y, sing, policy_, [&](const CurvePoint& cp) {
          const Vec2 n = Patch::normal_of(cp.tangent);
          const Block fa = first(y, cp.x) * cp.weight;
          const Block sb = second(y, cp.x, n) * cp.weight;
          const BasisValues bv = pt.field.evaluate(cp.u);
          for (int r = 0; r < bv.count; ++r) {
            const int kk = bv.first + r;
            const double w = bv.value[r];
            op.u_part.template middleCols<2>(2 * patch_points_[p][kk]) += sb * w;
            op.t_part.template middleCols<2>(2 * (traction_offset_[p] + kk)) += fa * w;
          }
          if (pt.stress_load) {
            const Vec2 tl = stress_traction(*pt.stress_load, n);
            for (int c = 0; c < 2; ++c)
              if (pt.bc[c].type == BcType::traction) op.load += fa.col(c) * tl(c);
          }
        });
      }
    }
    return op;
  }

  /// Displacement integrals for an internal point (U and T kernels).
  BoundaryOperator<2> displacement_operator(const Vec2& y) const {
    check_internal(y);
    return boundary_operator<2>(
        y, {}, [&](const Vec2& a, const Vec2& b) { return kernels_.U(a, b); },
        [&](const Vec2& a, const Vec2& b, const Vec2& n) { return kernels_.T(a, b, n); });
  }

  /// Strain integrals for an internal point (S and R kernels).
  BoundaryOperator<3> strain_operator(const Vec2& y) const {
    check_internal(y);
    return boundary_operator<3>(
        y, {}, [&](const Vec2& a, const Vec2& b) { return kernels_.S(a, b); },
        [&](const Vec2& a, const Vec2& b, const Vec2& n) { return kernels_.R(a, b, n); });
  }

  /// Collocation rows of point n: H u = G t + load, with the diagonal block
  /// completed from the rigid-body condition (plus I for infinite domains).
  struct CollocationRows {
    Eigen::Matrix<double, 2, Eigen::Dynamic> H;
    Eigen::Matrix<double, 2, Eigen::Dynamic> G;
    Vec2 load;
  };
  CollocationRows collocation_rows(std::size_t n) const {
    const CollocationPoint& cp = points_[n];
    BoundaryOperator<2> op = boundary_operator<2>(
        cp.y, cp.on, [&](const Vec2& a, const Vec2& b) { return kernels_.U(a, b); },
        [&](const Vec2& a, const Vec2& b, const Vec2& nn) { return kernels_.T(a, b, nn); });
    Mat2 diag = Mat2::Zero();
    if (domain_ == DomainKind::infinite) diag = Mat2::Identity();
    for (std::size_t g = 0; g < point_count(); ++g) diag -= op.u_part.middleCols<2>(2 * g);
    for (const auto& [g, w] : cp.combination) op.u_part.middleCols<2>(2 * g) += diag * w;
    return {std::move(op.u_part), std::move(op.t_part), op.load};
  }

  static Vec2 stress_traction(const Voigt& s, const Vec2& n) {
    return Vec2(s(0) * n(0) + s(2) * n(1), s(2) * n(0) + s(1) * n(1));
  }

  struct ClosestPoint {
    int patch = -1;
    double u = 0.0;
    double distance = std::numeric_limits<double>::infinity();
  };

  /// Closest boundary point to y: sampling per knot span, then golden-section
  /// refinement around the best sample.
  ClosestPoint closest_point(const Vec2& y) const {
    ClosestPoint best;
    for (std::size_t p = 0; p < patches_.size(); ++p) {
      const Patch& pt = patches_[p];
      auto dist = [&](double u) { return (pt.geometry.evaluate(u) - y).norm(); };
      const std::vector<double> br = pt.breakpoints();
      for (std::size_t k = 0; k + 1 < br.size(); ++k) {
        constexpr int m = 16;
        const double h = (br[k + 1] - br[k]) / m;
        double bu = br[k], bd = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= m; ++i) {
          const double u = i == m ? br[k + 1] : br[k] + h * i;
          const double d = dist(u);
          if (d < bd) {
            bd = d;
            bu = u;
          }
        }
        double lo = std::max(br[k], bu - h), hi = std::min(br[k + 1], bu + h);
        for (int it = 0; it < 60; ++it) {
          const double m1 = lo + 0.381966 * (hi - lo), m2 = hi - 0.381966 * (hi - lo);
          if (dist(m1) < dist(m2)) hi = m2;
          else lo = m1;
        }
        const double um = 0.5 * (lo + hi);
        if (dist(um) < bd) {
          bd = dist(um);
          bu = um;
        }
        if (bd < best.distance) best = {static_cast<int>(p), bu, bd};
      }
    }
    return best;
  }

  double distance_to_boundary(const Vec2& y) const { return closest_point(y).distance; }

  /// Local element size near y: length of the closest knot span.
  double local_element_size(const Vec2& y) const {
    double best = std::numeric_limits<double>::infinity(), size = scale_;
    for (const Patch& pt : patches_) {
      const std::vector<double> br = pt.breakpoints();
      for (std::size_t k = 0; k + 1 < br.size(); ++k) {
        const Vec2 a = pt.geometry.evaluate(br[k]), b = pt.geometry.evaluate(br[k + 1]);
        const Vec2 m = pt.geometry.evaluate(0.5 * (br[k] + br[k + 1]));
        const double d = std::min({(a - y).norm(), (b - y).norm(), (m - y).norm()});
        if (d < best) {
          best = d;
          size = (a - m).norm() + (m - b).norm();
        }
      }
    }
    return size;
  }

 private:
  void check_internal(const Vec2& y) const {
    const double d = distance_to_boundary(y);
    if (d <= 1e-3 * local_element_size(y))
      throw DomainError("internal point (" + std::to_string(y.x()) + ", " + std::to_string(y.y()) +
                        ") is too close to the boundary");
  }

  void validate_patches() {
    scale_ = 0.0;
    for (const Patch& p : patches_) {
      if (p.field.degree() < 1) throw ModelError("patch '" + p.name + "': field basis needs degree >= 1");
      if (p.field.size() < 2) throw ModelError("patch '" + p.name + "': field basis needs 2 functions");
      for (int d = 0; d < 2; ++d)
        if (!p.bc[d].values.empty() && p.bc[d].values.size() != p.field.size())
          throw ModelError("patch '" + p.name + "': " + std::to_string(p.bc[d].values.size()) +
                           " boundary values for " + std::to_string(p.field.size()) + " field functions");
      for (const Vec2& c : p.geometry.control_points()) scale_ = std::max(scale_, c.norm());
    }
    if (!(scale_ > 0.0)) scale_ = 1.0;
  }

  void build_points() {
    const double tol = 1e-9 * scale_;
    patch_points_.resize(patches_.size());
    // shared end points
    struct End {
      Vec2 x;
      int point;
      int starts = 0, ends = 0;
    };
    std::vector<End> ends;
    auto end_point = [&](const Vec2& x, bool start, int p, double u) {
      for (End& e : ends) {
        if ((e.x - x).norm() <= tol) {
          (start ? e.starts : e.ends)++;
          points_[e.point].on.emplace_back(p, u);
          return e.point;
        }
      }
      const int id = static_cast<int>(points_.size());
      CollocationPoint cp;
      cp.y = x;
      cp.on.emplace_back(p, u);
      cp.combination.emplace_back(id, 1.0);
      points_.push_back(cp);
      ends.push_back({x, id, start ? 1 : 0, start ? 0 : 1});
      return id;
    };
    for (std::size_t p = 0; p < patches_.size(); ++p) {
      const Patch& pt = patches_[p];
      const auto n = pt.field.size();
      patch_points_[p].assign(n, -1);
      const std::vector<double> g = pt.field.greville();
      patch_points_[p][0] = end_point(pt.geometry.evaluate(0.0), true, static_cast<int>(p), 0.0);
      for (std::size_t k = 1; k + 1 < n; ++k) {
        const int id = static_cast<int>(points_.size());
        CollocationPoint cp;
        cp.y = pt.geometry.evaluate(g[k]);
        cp.on.emplace_back(static_cast<int>(p), g[k]);
        points_.push_back(cp);
        patch_points_[p][k] = id;
      }
      patch_points_[p][n - 1] = end_point(pt.geometry.evaluate(1.0), false, static_cast<int>(p), 1.0);
    }
    for (const End& e : ends) {
      if (e.starts != 1 || e.ends != 1)
        throw ModelError("boundary is not a closed, consistently oriented loop at (" + std::to_string(e.x.x()) + ", " +
                         std::to_string(e.x.y()) + ")");
    }
    // interior points: combination of the owning patch's basis at its Greville abscissa
    for (std::size_t p = 0; p < patches_.size(); ++p) {
      const Patch& pt = patches_[p];
      for (std::size_t k = 1; k + 1 < pt.field.size(); ++k) {
        CollocationPoint& cp = points_[patch_points_[p][k]];
        const BasisValues b = pt.field.evaluate(cp.on.front().second);
        for (int r = 0; r < b.count; ++r)
          if (b.value[r] != 0.0) cp.combination.emplace_back(patch_points_[p][b.first + r], b.value[r]);
      }
    }
    for (std::size_t a = 0; a < points_.size(); ++a)
      for (std::size_t b = a + 1; b < points_.size(); ++b)
        if ((points_[a].y - points_[b].y).norm() <= tol)
          throw ModelError("coincident collocation points at (" + std::to_string(points_[a].y.x()) + ", " +
                           std::to_string(points_[a].y.y()) + ")");
    // restrained directions
    for (std::size_t p = 0; p < patches_.size(); ++p) {
      for (int d = 0; d < 2; ++d) {
        if (patches_[p].bc[d].type != BcType::displacement) continue;
        for (std::size_t k = 0; k < patches_[p].field.size(); ++k) {
          CollocationPoint& cp = points_[patch_points_[p][k]];
          const double v = patches_[p].bc[d].value(k);
          if (cp.restrained[d] && std::abs(cp.value[d] - v) > 1e-12 * std::max(1.0, std::abs(v)))
            throw ModelError("conflicting prescribed displacements at a patch join of '" + patches_[p].name + "'");
          cp.restrained[d] = true;
          cp.value[d] = v;
        }
      }
    }
  }

  void check_orientation() {
    // signed area by oint x dy
    double area = 0.0;
    const QuadratureRule& rule = gauss_legendre(16);
    for (const Patch& pt : patches_) {
      const std::vector<double> br = pt.breakpoints();
      for (std::size_t k = 0; k + 1 < br.size(); ++k) {
        const double h = 0.5 * (br[k + 1] - br[k]);
        for (std::size_t i = 0; i < rule.size(); ++i) {
          const auto [x, d] = pt.geometry.evaluate_with_derivative(br[k] + h * (1.0 + rule.points[i]));
          area += rule.weights[i] * h * x.x() * d.y();
        }
      }
    }
    if (domain_ == DomainKind::finite && !(area > 0.0))
      throw ModelError("finite-domain boundary must run counterclockwise (normals pointing out of the body)");
    if (domain_ == DomainKind::infinite && !(area < 0.0))
      throw ModelError("infinite-domain boundary must run clockwise (normals pointing into the hole)");
  }

  void build_traction_layout() {
    traction_offset_.resize(patches_.size());
    int off = 0;
    for (std::size_t p = 0; p < patches_.size(); ++p) {
      traction_offset_[p] = off;
      off += static_cast<int>(patches_[p].field.size());
    }
    traction_total_ = static_cast<std::size_t>(off);
  }

  std::vector<Patch> patches_;
  DomainKind domain_ = DomainKind::finite;
  IsotropicMaterial material_;
  Kernels kernels_;
  QuadraturePolicy policy_;
  std::vector<CollocationPoint> points_;
  std::vector<std::vector<int>> patch_points_;
  std::vector<int> traction_offset_;
  std::size_t traction_total_ = 0;
  double scale_ = 1.0;
};

/// Assembled and factorized collocation system. Unknowns are the free
/// displacement coefficients and the traction coefficients of displacement
/// components. Where two patches restrained in the same direction meet, their
/// corner traction coefficients are one shared unknown.
class BoundarySystem {
 public:
  explicit BoundarySystem(const BoundaryModel& model) : model_(&model) {
    build_unknowns();
    assemble();
    factorize();
  }

  const BoundaryModel& model() const { return *model_; }
  const Eigen::MatrixXd& H() const { return H_; }
  const Eigen::MatrixXd& G() const { return G_; }
  const Eigen::VectorXd& load() const { return load_; }
  const Eigen::MatrixXd& matrix() const { return A_; }
  /// Right-hand side from the prescribed data.
  const Eigen::VectorXd& rhs() const { return b_; }
  std::size_t unknown_count() const { return static_cast<std::size_t>(A_.cols()); }

  /// Solves with an extra right-hand side f0 (2 per collocation point, may
  /// be empty). Returns the complete boundary solution.
  BoundarySolution solve(const Eigen::VectorXd& f0 = Eigen::VectorXd()) const {
    Eigen::VectorXd b = b_;
    if (f0.size() != 0) {
      if (f0.size() != b.size()) throw DomainError("F0 size does not match the system");
      b += f0;
    }
    const Eigen::VectorXd x = lu_.solve(b);
    const double res = (A_ * x - b).norm();
    last_residual_ = res;
    if (res > 1e-10 * std::max(b.norm(), 1e-300) && b.norm() > 0.0)
      throw SolverError("boundary solve residual " + std::to_string(res) + " exceeds 1e-10 of the load");
    return expand(x);
  }

  /// Solution increment produced by f0 alone (prescribed data set to zero).
  BoundarySolution solve_increment(const Eigen::VectorXd& f0) const {
    if (f0.size() != b_.size()) throw DomainError("F0 size does not match the system");
    const Eigen::VectorXd x = lu_.solve(f0);
    last_residual_ = (A_ * x - f0).norm();
    BoundarySolution s{Eigen::VectorXd::Zero(H_.cols()), Eigen::VectorXd::Zero(G_.cols())};
    scatter(x, s);
    return s;
  }

  double last_residual() const { return last_residual_; }

 private:
  void build_unknowns() {
    const BoundaryModel& m = *model_;
    u_index_.assign(2 * m.point_count(), -1);
    int next = 0;
    for (std::size_t n = 0; n < m.point_count(); ++n)
      for (int d = 0; d < 2; ++d)
        if (!m.points()[n].restrained[d]) u_index_[2 * n + d] = next++;
    t_index_.assign(2 * m.traction_count(), -1);
    for (std::size_t p = 0; p < m.patches().size(); ++p)
      for (int d = 0; d < 2; ++d)
        if (m.patches()[p].bc[d].type == BcType::displacement)
          for (std::size_t k = 0; k < m.patches()[p].field.size(); ++k)
            t_index_[2 * (m.traction_offset(static_cast<int>(p)) + k) + d] = next++;
    // tie corner coefficients of neighbouring patches restrained in the same direction
    for (const CollocationPoint& cp : m.points()) {
      if (cp.on.size() != 2) continue;
      int ending = -1, starting = -1;
      for (const auto& [q, u] : cp.on) (u == 1.0 ? ending : starting) = q;
      if (ending < 0 || starting < 0) continue;
      for (int d = 0; d < 2; ++d) {
        const int last = t_index_[2 * (m.traction_offset(ending) + m.patches()[ending].field.size() - 1) + d];
        int& first = t_index_[2 * m.traction_offset(starting) + d];
        if (last < 0 || first < 0) continue;
        const int old = first;
        for (int& v : t_index_)
          if (v == old) v = last;
      }
    }
    // compact numbering
    std::vector<int> remap(static_cast<std::size_t>(next), -1);
    int compact = static_cast<int>(std::count_if(u_index_.begin(), u_index_.end(), [](int v) { return v >= 0; }));
    for (int& v : t_index_) {
      if (v < 0) continue;
      if (remap[v] < 0) remap[v] = compact++;
      v = remap[v];
    }
    next = compact;
    unknowns_ = next;
    if (unknowns_ != static_cast<int>(2 * m.point_count()))
      throw ModelError("boundary conditions give " + std::to_string(unknowns_) + " unknowns for " +
                       std::to_string(2 * m.point_count()) + " collocation equations");
  }

  void assemble() {
    const BoundaryModel& m = *model_;
    const auto np = static_cast<Eigen::Index>(m.point_count());
    H_ = Eigen::MatrixXd::Zero(2 * np, 2 * np);
    G_ = Eigen::MatrixXd::Zero(2 * np, 2 * static_cast<Eigen::Index>(m.traction_count()));
    load_ = Eigen::VectorXd::Zero(2 * np);
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (Eigen::Index n = 0; n < np; ++n) {
      try {
        const auto rows = m.collocation_rows(static_cast<std::size_t>(n));
        H_.middleRows<2>(2 * n) = rows.H;
        G_.middleRows<2>(2 * n) = rows.G;
        load_.segment<2>(2 * n) = rows.load;
      } catch (...) {
#pragma omp critical
        failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);

    A_ = Eigen::MatrixXd::Zero(2 * np, unknowns_);
    const BoundarySolution known = m.prescribed();
    b_ = load_ + G_ * known.t - H_ * known.u;
    for (Eigen::Index c = 0; c < H_.cols(); ++c)
      if (u_index_[c] >= 0) A_.col(u_index_[c]) += H_.col(c);
    for (Eigen::Index c = 0; c < G_.cols(); ++c)
      if (t_index_[c] >= 0) A_.col(t_index_[c]) -= G_.col(c);
  }

  void factorize() {
    lu_.compute(A_);
    if (lu_.rank() < A_.cols()) throw SolverError(describe_null_space());
  }

  std::string describe_null_space() const {
    const BoundaryModel& m = *model_;
    const Eigen::MatrixXd ker = lu_.kernel();
    std::string msg = "singular boundary system (rank " + std::to_string(lu_.rank()) + " of " +
                      std::to_string(A_.cols()) + ")";
    // compare the displacement part of the null vectors with rigid-body modes
    const auto np = m.point_count();
    Eigen::MatrixXd modes = Eigen::MatrixXd::Zero(2 * np, 3);
    for (std::size_t n = 0; n < np; ++n) {
      const Vec2 y = m.points()[n].y;
      modes(2 * n, 0) = 1.0;
      modes(2 * n + 1, 1) = 1.0;
      modes(2 * n, 2) = -y.y();
      modes(2 * n + 1, 2) = y.x();
    }
    const char* names[3] = {"rigid-body translation in x", "rigid-body translation in y", "rigid-body rotation"};
    std::vector<std::string> found;
    for (Eigen::Index c = 0; c < ker.cols(); ++c) {
      Eigen::VectorXd u = Eigen::VectorXd::Zero(2 * np);
      for (std::size_t i = 0; i < u_index_.size(); ++i)
        if (u_index_[i] >= 0) u(static_cast<Eigen::Index>(i)) = ker(u_index_[i], c);
      if (u.norm() == 0.0) continue;
      for (int k = 0; k < 3; ++k) {
        const double cosv = std::abs(u.dot(modes.col(k))) / (u.norm() * modes.col(k).norm());
        if (cosv > 0.9) found.emplace_back(names[k]);
      }
    }
    if (found.empty()) return msg + ": null space is not a rigid-body mode";
    msg += ": unconstrained ";
    for (std::size_t i = 0; i < found.size(); ++i) msg += (i ? ", " : "") + found[i];
    return msg;
  }

  void scatter(const Eigen::VectorXd& x, BoundarySolution& s) const {
    for (std::size_t i = 0; i < u_index_.size(); ++i)
      if (u_index_[i] >= 0) s.u(static_cast<Eigen::Index>(i)) = x(u_index_[i]);
    for (std::size_t i = 0; i < t_index_.size(); ++i)
      if (t_index_[i] >= 0) s.t(static_cast<Eigen::Index>(i)) = x(t_index_[i]);
  }

  BoundarySolution expand(const Eigen::VectorXd& x) const {
    BoundarySolution s = model_->prescribed();
    scatter(x, s);
    return s;
  }

  const BoundaryModel* model_;
  std::vector<int> u_index_;
  std::vector<int> t_index_;
  int unknowns_ = 0;
  Eigen::MatrixXd H_, G_, A_;
  Eigen::VectorXd load_, b_;
  Eigen::FullPivLU<Eigen::MatrixXd> lu_;
  mutable double last_residual_ = 0.0;
};

}  // namespace igabem
