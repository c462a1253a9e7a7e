#pragma once

// Regular (s,t) grid of stress samples inside an inclusion: finite
// difference derivatives, body forces from initial stresses, boundary
// tractions and bilinear interpolation.

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "igabem/errors.hpp"
#include "igabem/inclusion.hpp"
#include "igabem/material.hpp"
#include "igabem/nurbs.hpp"

namespace igabem {

/// Nodal values carried per grid node.
struct GridNode {
  double s = 0.0;
  double t = 0.0;
  Vec2 x = Vec2::Zero();
  Mat2 jacobian = Mat2::Identity();  // rows dx/ds, dx/dt
  double det = 1.0;
};

/// Bilinear weights of the four corners of the cell containing (s,t).
struct CellWeights {
  std::array<int, 4> node{};
  std::array<double, 4> weight{};
};

/// Spatial derivatives of a Voigt field at a node.
struct VoigtGradient {
  Voigt d_dx = Voigt::Zero();
  Voigt d_dy = Voigt::Zero();
};

class FieldGrid {
 public:
  FieldGrid() = default;

  FieldGrid(int n_s, int n_t) : n_s_(n_s), n_t_(n_t) {
    if (n_s < 2 || n_t < 2) throw ModelError("field grid needs at least 2x2 nodes");
    nodes_.resize(static_cast<std::size_t>(n_s) * n_t);
    for (int j = 0; j < n_t; ++j) {
      for (int i = 0; i < n_s; ++i) {
        GridNode& n = nodes_[index(i, j)];
        n.s = s_coord(i);
        n.t = t_coord(j);
        n.x = Vec2(n.s, n.t);
      }
    }
    boundary_slot_.assign(size(), -1);
    for (std::size_t k = 0; k < size(); ++k) {
      if (!on_boundary(k)) continue;
      boundary_slot_[k] = static_cast<int>(boundary_nodes_.size());
      boundary_nodes_.push_back(static_cast<int>(k));
    }
    clear_fields();
  }

  /// Grid on an inclusion using its grid dimensions; node geometry and
  /// Jacobians come from the inclusion map.
  explicit FieldGrid(const Inclusion& inc) : FieldGrid(inc.grid_s(), inc.grid_t()) {
    for (GridNode& n : nodes_) {
      n.x = inc.map(n.s, n.t);
      n.jacobian = inc.jacobian_matrix(n.s, n.t);
      n.det = n.jacobian.determinant();
    }
  }

  int n_s() const { return n_s_; }
  int n_t() const { return n_t_; }
  std::size_t size() const { return nodes_.size(); }
  double ds() const { return 1.0 / (n_s_ - 1); }
  double dt() const { return 1.0 / (n_t_ - 1); }
  double s_coord(int i) const { return i == n_s_ - 1 ? 1.0 : i * ds(); }
  double t_coord(int j) const { return j == n_t_ - 1 ? 1.0 : j * dt(); }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * n_s_ + i; }
  int i_of(std::size_t k) const { return static_cast<int>(k % n_s_); }
  int j_of(std::size_t k) const { return static_cast<int>(k / n_s_); }
  const GridNode& node(std::size_t k) const { return nodes_[k]; }
  const std::vector<GridNode>& nodes() const { return nodes_; }

  bool on_boundary(std::size_t k) const {
    const int i = i_of(k), j = j_of(k);
    return i == 0 || j == 0 || i == n_s_ - 1 || j == n_t_ - 1;
  }

  /// Nodes on the unit-square boundary, in index order.
  const std::vector<int>& boundary_nodes() const { return boundary_nodes_; }
  /// Position of node k in `boundary_nodes()`, or -1 for interior nodes.
  int boundary_slot(std::size_t k) const { return boundary_slot_[k]; }

  /// Total stress, accumulated initial stress and its latest increment.
  std::vector<Voigt> stress;
  std::vector<Voigt> initial_stress;
  std::vector<Voigt> increment;
  /// Nodes with a nonzero latest increment.
  std::vector<char> active;

  void clear_fields() {
    stress.assign(size(), Voigt::Zero());
    initial_stress.assign(size(), Voigt::Zero());
    increment.assign(size(), Voigt::Zero());
    active.assign(size(), 0);
  }

  /// Derivatives (d/ds, d/dt) of a nodal scalar field. Central differences
  /// where both neighbours are usable, one-sided otherwise. With a mask,
  /// neighbours whose mask differs from the node's are not used, so stencils
  /// do not straddle a discontinuity front; if no neighbour qualifies the
  /// mask is ignored.
  std::pair<double, double> fd_local_derivatives(const std::vector<double>& f, int i, int j,
                                                 const std::vector<char>* mask = nullptr) const {
    if (static_cast<std::size_t>(f.size()) != size()) throw DomainError("field size mismatch");
    if (i < 0 || j < 0 || i >= n_s_ || j >= n_t_) throw DomainError("grid node out of range");
    const std::size_t k = index(i, j);
    auto usable = [&](int ii, int jj) {
      if (ii < 0 || jj < 0 || ii >= n_s_ || jj >= n_t_) return false;
      return !mask || (*mask)[index(ii, jj)] == (*mask)[k];
    };
    auto diff = [&](bool lo, bool hi, double flo, double fc, double fhi, double h) {
      if (lo && hi) return (fhi - flo) / (2.0 * h);
      if (hi) return (fhi - fc) / h;
      if (lo) return (fc - flo) / h;
      return 0.0;
    };
    auto value = [&](int ii, int jj) {
      return (ii < 0 || jj < 0 || ii >= n_s_ || jj >= n_t_) ? 0.0 : f[index(ii, jj)];
    };
    bool sl = usable(i - 1, j), sh = usable(i + 1, j);
    if (mask && !sl && !sh) {
      sl = i > 0;
      sh = i < n_s_ - 1;
    }
    bool tl = usable(i, j - 1), th = usable(i, j + 1);
    if (mask && !tl && !th) {
      tl = j > 0;
      th = j < n_t_ - 1;
    }
    const double d_s = diff(sl, sh, value(i - 1, j), f[k], value(i + 1, j), ds());
    const double d_t = diff(tl, th, value(i, j - 1), f[k], value(i, j + 1), dt());
    return {d_s, d_t};
  }

  /// Global x/y derivatives of every Voigt component at node k,
  /// [d/dx; d/dy] = J^{-1} [d/ds; d/dt].
  VoigtGradient global_stress_derivatives(const std::vector<Voigt>& field, std::size_t k,
                                          const std::vector<char>* mask = nullptr) const {
    const GridNode& n = nodes_[k];
    if (!(std::abs(n.det) > 0.0)) throw ModelError("singular grid Jacobian");
    const Mat2 jinv = n.jacobian.inverse();
    VoigtGradient g;
    std::vector<double> comp(size());
    for (int c = 0; c < 3; ++c) {
      for (std::size_t m = 0; m < size(); ++m) comp[m] = field[m](c);
      const auto [fs, ft] = fd_local_derivatives(comp, i_of(k), j_of(k), mask);
      const Vec2 gx = jinv * Vec2(fs, ft);
      g.d_dx(c) = gx(0);
      g.d_dy(c) = gx(1);
    }
    return g;
  }

  /// Body force b = -div(sigma) of a Voigt field at node k.
  Vec2 body_force(const std::vector<Voigt>& field, std::size_t k,
                  const std::vector<char>* mask = nullptr) const {
    const VoigtGradient g = global_stress_derivatives(field, k, mask);
    return Vec2(-(g.d_dx(0) + g.d_dy(2)), -(g.d_dx(2) + g.d_dy(1)));
  }

  /// Body forces at all nodes; with a mask, nodes outside it get zero.
  std::vector<Vec2> body_forces(const std::vector<Voigt>& field,
                                const std::vector<char>* mask = nullptr) const {
    std::vector<Vec2> b(size(), Vec2::Zero());
    // component-wise local derivatives once per component
    std::array<std::vector<double>, 3> comp;
    for (int c = 0; c < 3; ++c) {
      comp[c].resize(size());
      for (std::size_t m = 0; m < size(); ++m) comp[c][m] = field[m](c);
    }
    for (std::size_t k = 0; k < size(); ++k) {
      if (mask && !(*mask)[k]) continue;
      const GridNode& n = nodes_[k];
      const Mat2 jinv = n.jacobian.inverse();
      Voigt dx, dy;
      for (int c = 0; c < 3; ++c) {
        const auto [fs, ft] = fd_local_derivatives(comp[c], i_of(k), j_of(k), mask);
        const Vec2 gx = jinv * Vec2(fs, ft);
        dx(c) = gx(0);
        dy(c) = gx(1);
      }
      b[k] = Vec2(-(dx(0) + dy(2)), -(dx(2) + dy(1)));
    }
    return b;
  }

  /// Traction sigma . n of a Voigt stress.
  static Vec2 traction(const Voigt& s, const Vec2& n) {
    return Vec2(s(0) * n(0) + s(2) * n(1), s(2) * n(0) + s(1) * n(1));
  }

  /// Corner nodes and bilinear weights of the cell holding (s,t).
  CellWeights cell_weights(double s, double t) const {
    if (!(s >= -kParamTol && s <= 1.0 + kParamTol && t >= -kParamTol && t <= 1.0 + kParamTol))
      throw DomainError("grid coordinates outside the unit square");
    s = std::clamp(s, 0.0, 1.0);
    t = std::clamp(t, 0.0, 1.0);
    const int i = std::min(static_cast<int>(s / ds()), n_s_ - 2);
    const int j = std::min(static_cast<int>(t / dt()), n_t_ - 2);
    const double a = std::clamp((s - s_coord(i)) / ds(), 0.0, 1.0);
    const double b = std::clamp((t - t_coord(j)) / dt(), 0.0, 1.0);
    CellWeights w;
    w.node = {static_cast<int>(index(i, j)), static_cast<int>(index(i + 1, j)),
              static_cast<int>(index(i + 1, j + 1)), static_cast<int>(index(i, j + 1))};
    w.weight = {(1 - a) * (1 - b), a * (1 - b), a * b, (1 - a) * b};
    return w;
  }

  template <class T>
  T interpolate(const std::vector<T>& values, double s, double t) const {
    const CellWeights w = cell_weights(s, t);
    T v = values[w.node[0]] * w.weight[0];
    for (int c = 1; c < 4; ++c) v += values[w.node[c]] * w.weight[c];
    return v;
  }

  double interpolate(const std::vector<double>& values, double s, double t) const {
    const CellWeights w = cell_weights(s, t);
    double v = 0.0;
    for (int c = 0; c < 4; ++c) v += values[w.node[c]] * w.weight[c];
    return v;
  }

  /// Parameter rectangle of cell (i, j).
  ParamRect cell(int i, int j) const {
    return {s_coord(i), s_coord(i + 1), t_coord(j), t_coord(j + 1)};
  }

  /// Fill boundary-node values by linear extrapolation from the two nearest
  /// interior nodes along the grid line (constant when only one interior
  /// node exists). Interior values are left unchanged.
  template <class T>
  void extrapolate_to_boundary(std::vector<T>& v) const {
    if (n_s_ < 3 || n_t_ < 3)
      throw ModelError("extrapolation to the inclusion boundary needs at least 3x3 grid nodes");
    auto line = [&](auto at, int n) {
      // at(k) returns a reference to the k-th value along the line
      if (n >= 4) {
        at(0) = 2.0 * at(1) - at(2);
        at(n - 1) = 2.0 * at(n - 2) - at(n - 3);
      } else {
        at(0) = at(1);
        at(n - 1) = at(n - 2);
      }
    };
    for (int j = 1; j < n_t_ - 1; ++j)
      line([&](int i) -> T& { return v[index(i, j)]; }, n_s_);
    for (int i = 0; i < n_s_; ++i)
      line([&](int j) -> T& { return v[index(i, j)]; }, n_t_);
  }

 private:
  int n_s_ = 0;
  int n_t_ = 0;
  std::vector<GridNode> nodes_;
  std::vector<int> boundary_nodes_;
  std::vector<int> boundary_slot_;
};

}  // namespace igabem
