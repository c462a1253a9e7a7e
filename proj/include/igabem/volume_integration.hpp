#pragma once

// Integrals over an inclusion boundary S0 and volume V0: the right-hand side
// contributions of initial-stress loads, the strain kernel volume integral
// with its surface-integral regularization, and the linear operators that
// map grid values to those integrals for a fixed target point.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "igabem/errors.hpp"
#include "igabem/field_grid.hpp"
#include "igabem/inclusion.hpp"
#include "igabem/kernels.hpp"
#include "igabem/quadrature.hpp"

namespace igabem {

/// Displacement-type target: 2 rows, kernel U.
struct DisplacementKernel {
  static constexpr int rows = 2;
  const Kernels* kernels;
  Eigen::Matrix<double, 2, 2> operator()(const Vec2& y, const Vec2& x) const { return kernels->U(y, x); }
};

/// Strain-type target: 3 Voigt rows, kernel S.
struct StrainKernel {
  static constexpr int rows = 3;
  const Kernels* kernels;
  Mat32 operator()(const Vec2& y, const Vec2& x) const { return kernels->S(y, x); }
};

/// Boundary segments of an inclusion that pass through the parameter point
/// `st`, with the segment parameter of the point.
inline std::vector<std::pair<InclusionSegment, double>> segments_through(const Vec2& st,
                                                                        double tol = 1e-9) {
  std::vector<std::pair<InclusionSegment, double>> out;
  const double s = st.x(), t = st.y();
  if (std::abs(t) <= tol) out.emplace_back(InclusionSegment::curve_I, s);
  if (std::abs(s - 1.0) <= tol) out.emplace_back(InclusionSegment::edge_2, t);
  if (std::abs(t - 1.0) <= tol) out.emplace_back(InclusionSegment::curve_II, 1.0 - s);
  if (std::abs(s) <= tol) out.emplace_back(InclusionSegment::edge_1, 1.0 - t);
  return out;
}

/// Parameter location of y when it lies in the closed inclusion.
inline std::optional<Vec2> inclusion_parameters(const Inclusion& inc, const Vec2& y) {
  const InclusionLocation loc = inc.locate(y);
  if (!loc.inside) return std::nullopt;
  Vec2 st = loc.st;
  // snap to the boundary so on-boundary points are recognised exactly
  for (int c = 0; c < 2; ++c) {
    if (std::abs(st(c)) < 1e-9) st(c) = 0.0;
    if (std::abs(st(c) - 1.0) < 1e-9) st(c) = 1.0;
  }
  return st;
}

/// Visits integration points on S0. The visitor receives
/// (segment, segment parameter, (s,t), x, outward unit normal, weight).
/// `extra_breaks(seg)` adds parameter breakpoints (e.g. grid node positions).
template <class Visitor, class Breaks>
void integrate_inclusion_boundary(const Inclusion& inc, const Vec2& y, const std::optional<Vec2>& y_st,
                                  const QuadraturePolicy& policy, Breaks&& extra_breaks,
                                  Visitor&& visit) {
  const auto on = y_st ? segments_through(*y_st) : std::vector<std::pair<InclusionSegment, double>>{};
  for (InclusionSegment seg : kInclusionSegments) {
    if (inc.segment_degenerate(seg)) continue;
    std::vector<double> br = inc.segment_breakpoints(seg);
    for (double b : extra_breaks(seg)) br.push_back(b);
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end(), [](double a, double b) { return std::abs(a - b) < 1e-13; }),
             br.end());
    std::optional<double> su;
    for (const auto& [sg, u] : on)
      if (sg == seg) su = u;
    auto curve = [&](double u) { return inc.segment_point(seg, u); };
    for (std::size_t k = 0; k + 1 < br.size(); ++k) {
      const double a = br[k], b = br[k + 1];
      std::optional<double> sing;
      if (su && *su >= a - 1e-12 && *su <= b + 1e-12) sing = *su;
      integrate_curve(curve, a, b, y, sing, policy, [&](const CurvePoint& p) {
        const double len = p.tangent.norm();
        const Vec2 n(p.tangent.y() / len, -p.tangent.x() / len);
        visit(seg, p.u, Inclusion::segment_to_st(seg, p.u), p.x, n, p.weight);
      });
    }
  }
}

/// Visits integration points of V0 over the given parameter rectangles. The
/// rectangle holding y (if any) uses the degenerate triangle scheme.
template <class Visitor>
void integrate_inclusion_volume(const Inclusion& inc, const std::vector<ParamRect>& rects, const Vec2& y,
                                const std::optional<Vec2>& y_st, const QuadraturePolicy& policy,
                                Visitor&& visit) {
  auto map = [&](double s, double t) { return inc.map_with_det(s, t); };
  for (const ParamRect& r : rects) integrate_rect(map, r, y, y_st, policy, visit);
}

/// Parameter rectangles bounded by the knot lines of both curves, so that the
/// map is smooth on each.
inline std::vector<ParamRect> knot_regions(const Inclusion& inc) {
  std::vector<ParamRect> out;
  const auto br = inc.merged_breakpoints();
  for (std::size_t k = 0; k + 1 < br.size(); ++k) out.push_back({br[k], br[k + 1], 0.0, 1.0});
  return out;
}

/// Integration regions covering the active cells of an (n_s-1) x (n_t-1)
/// cell mask (row-major in s). Runs of active cells in a row are merged with
/// an identical run in the previous row, so region edges follow the front of
/// the active zone; inactive cells are not covered.
inline std::vector<ParamRect> subdivide_for_plastic_extent(int n_s, int n_t, const std::vector<char>& cell_active) {
  const int cs = n_s - 1, ct = n_t - 1;
  if (cs < 1 || ct < 1 || static_cast<int>(cell_active.size()) != cs * ct)
    throw DomainError("cell mask does not match the grid");
  const double ds = 1.0 / cs, dt = 1.0 / ct;
  std::vector<ParamRect> out;
  struct Open {
    int i0, i1, j0;
  };
  std::vector<Open> open, next;
  auto close = [&](const Open& o, int j1) {
    out.push_back({o.i0 * ds, o.i1 == cs ? 1.0 : o.i1 * ds, o.j0 * dt, j1 == ct ? 1.0 : j1 * dt});
  };
  for (int j = 0; j < ct; ++j) {
    next.clear();
    int i = 0;
    while (i < cs) {
      if (!cell_active[static_cast<std::size_t>(j) * cs + i]) {
        ++i;
        continue;
      }
      int e = i;
      while (e < cs && cell_active[static_cast<std::size_t>(j) * cs + e]) ++e;
      auto it = std::find_if(open.begin(), open.end(), [&](const Open& o) { return o.i0 == i && o.i1 == e; });
      if (it != open.end()) {
        next.push_back(*it);
        open.erase(it);
      } else {
        next.push_back({i, e, j});
      }
      i = e;
    }
    for (const Open& o : open) close(o, j);
    open.swap(next);
  }
  for (const Open& o : open) close(o, ct);
  std::sort(out.begin(), out.end(), [](const ParamRect& a, const ParamRect& b) {
    return a.t0 != b.t0 ? a.t0 < b.t0 : a.s0 < b.s0;
  });
  return out;
}

/// Grid node positions along a boundary segment, in the segment parameter.
inline std::vector<double> grid_breaks(const FieldGrid& grid, InclusionSegment seg) {
  std::vector<double> b;
  const bool along_s = seg == InclusionSegment::curve_I || seg == InclusionSegment::curve_II;
  const bool reversed = seg == InclusionSegment::curve_II || seg == InclusionSegment::edge_1;
  const int n = along_s ? grid.n_s() : grid.n_t();
  for (int i = 0; i < n; ++i) {
    const double c = along_s ? grid.s_coord(i) : grid.t_coord(i);
    b.push_back(reversed ? 1.0 - c : c);
  }
  return b;
}

/// Splits parameter rectangles along the grid lines, so that fields
/// interpolated on the grid are smooth on every piece.
inline std::vector<ParamRect> split_at_grid_lines(const std::vector<ParamRect>& rects, const FieldGrid& grid) {
  std::vector<ParamRect> out;
  auto cuts = [](double a, double b, int n, auto coord) {
    std::vector<double> c = {a};
    for (int i = 0; i < n; ++i) {
      const double v = coord(i);
      if (v > a + 1e-13 && v < b - 1e-13) c.push_back(v);
    }
    c.push_back(b);
    return c;
  };
  for (const ParamRect& r : rects) {
    const auto cs = cuts(r.s0, r.s1, grid.n_s(), [&](int i) { return grid.s_coord(i); });
    const auto ct = cuts(r.t0, r.t1, grid.n_t(), [&](int j) { return grid.t_coord(j); });
    for (std::size_t j = 0; j + 1 < ct.size(); ++j)
      for (std::size_t i = 0; i + 1 < cs.size(); ++i) out.push_back({cs[i], cs[i + 1], ct[j], ct[j + 1]});
  }
  return out;
}

/// Integral of U t0 over S0 for a traction field t0(st, x, n). When the
/// field comes from grid interpolation, passing the grid places quadrature
/// breaks at its nodes.
inline Vec2 f0_surface(const Vec2& y, const Inclusion& inc,
                       const std::function<Vec2(const Vec2&, const Vec2&, const Vec2&)>& t0,
                       const IsotropicMaterial& domain, const FieldGrid* grid = nullptr,
                       const QuadraturePolicy& policy = {}) {
  const Kernels k(domain);
  Vec2 sum = Vec2::Zero();
  integrate_inclusion_boundary(
      inc, y, inclusion_parameters(inc, y), policy,
      [&](InclusionSegment seg) { return grid ? grid_breaks(*grid, seg) : std::vector<double>{}; },
      [&](InclusionSegment, double, const Vec2& st, const Vec2& x, const Vec2& n, double w) {
        sum += k.U(y, x) * t0(st, x, n) * w;
      });
  return sum;
}

/// Integral of U b0 over V0 for a body force field b0(st, x), restricted to
/// `regions` when given (the whole inclusion otherwise). With a grid, regions
/// are split along its lines.
inline Vec2 f0_volume(const Vec2& y, const Inclusion& inc, const std::function<Vec2(const Vec2&, const Vec2&)>& b0,
                      const IsotropicMaterial& domain, const std::vector<ParamRect>& regions = {},
                      const FieldGrid* grid = nullptr, const QuadraturePolicy& policy = {}) {
  const Kernels k(domain);
  Vec2 sum = Vec2::Zero();
  std::vector<ParamRect> rects = regions.empty() ? knot_regions(inc) : regions;
  if (grid) rects = split_at_grid_lines(rects, *grid);
  integrate_inclusion_volume(inc, rects, y, inclusion_parameters(inc, y), policy,
                             [&](const AreaPoint& p) { sum += k.U(y, p.x) * b0(Vec2(p.s, p.t), p.x) * p.weight; });
  return sum;
}

/// Surface form of the strain kernel volume integral,
/// int_V0 S dV = oint_S0 S (n . (x - y)) dS, valid for y inside V0 because S
/// is homogeneous of degree -1 in x - y.
inline Mat32 strain_kernel_surface_identity(const Vec2& y, const Inclusion& inc, const Kernels& k,
                                            const std::optional<Vec2>& y_st = std::nullopt,
                                            const QuadraturePolicy& policy = {}) {
  Mat32 sum = Mat32::Zero();
  integrate_inclusion_boundary(
      inc, y, y_st, policy, [](InclusionSegment) { return std::vector<double>{}; },
      [&](InclusionSegment, double, const Vec2&, const Vec2& x, const Vec2& n, double w) {
        sum += k.S(y, x) * (n.dot(x - y) * w);
      });
  return sum;
}

/// Strain at an interior point of V0 from a body force field b0(st, x) over
/// that inclusion: int S [b0(x) - b0(y)] dV + [oint S (n . r) dS] b0(y).
inline Voigt strongly_singular_S_volume(const Vec2& y_st, const Inclusion& inc,
                                        const std::function<Vec2(const Vec2&, const Vec2&)>& b0,
                                        const IsotropicMaterial& domain, const FieldGrid* grid = nullptr,
                                        const QuadraturePolicy& policy = {}) {
  if (!(y_st.x() > 0.0 && y_st.x() < 1.0 && y_st.y() > 0.0 && y_st.y() < 1.0))
    throw DomainError("strongly singular volume term needs a point strictly inside the inclusion");
  const Kernels k(domain);
  const Vec2 y = inc.map(y_st.x(), y_st.y());
  const Vec2 by = b0(y_st, y);
  Voigt sum = Voigt::Zero();
  std::vector<ParamRect> rects = knot_regions(inc);
  if (grid) rects = split_at_grid_lines(rects, *grid);
  integrate_inclusion_volume(inc, rects, y, y_st, policy, [&](const AreaPoint& p) {
    sum += k.S(y, p.x) * ((b0(Vec2(p.s, p.t), p.x) - by) * p.weight);
  });
  return sum + strain_kernel_surface_identity(y, inc, k, std::nullopt, policy) * by;
}

/// Linear map from the grid fields of one inclusion to a kernel integral at a
/// fixed target point:
///   result = traction * (Voigt initial stress at boundary nodes, 3 per node)
///          + body * (body force at all nodes, 2 per node).
template <int Rows>
struct InclusionOperator {
  using Matrix = Eigen::Matrix<double, Rows, Eigen::Dynamic>;
  Matrix traction;
  Matrix body;

  Eigen::Matrix<double, Rows, 1> apply(const Eigen::VectorXd& boundary_stress, const Eigen::VectorXd& body_force) const {
    return traction * boundary_stress + body * body_force;
  }
};

/// Packs boundary-node Voigt values of a grid field (3 per boundary node).
inline Eigen::VectorXd pack_boundary_stress(const FieldGrid& grid, const std::vector<Voigt>& field) {
  Eigen::VectorXd v(3 * grid.boundary_nodes().size());
  for (std::size_t b = 0; b < grid.boundary_nodes().size(); ++b) v.segment<3>(3 * b) = field[grid.boundary_nodes()[b]];
  return v;
}

/// Packs nodal body forces (2 per node).
inline Eigen::VectorXd pack_body_force(const std::vector<Vec2>& b) {
  Eigen::VectorXd v(2 * b.size());
  for (std::size_t k = 0; k < b.size(); ++k) v.segment<2>(2 * k) = b[k];
  return v;
}

/// Builds the operator of one inclusion for target y.
///
/// `y_st` gives the parameters of y when it lies in the closed inclusion.
/// With `own_node` >= 0 the target is that interior grid node of this
/// inclusion and the volume term uses the regularized form: the numerically
/// integrated kernel mass is removed from the node's column and replaced by
/// the surface identity.
template <class Kernel>
InclusionOperator<Kernel::rows> build_inclusion_operator(const Vec2& y, const Inclusion& inc, const FieldGrid& grid,
                                                         const Kernel& kernel, const std::optional<Vec2>& y_st,
                                                         int own_node, const QuadraturePolicy& policy = {}) {
  constexpr int R = Kernel::rows;
  using Block = Eigen::Matrix<double, R, 2>;
  InclusionOperator<R> op;
  const auto nb = static_cast<Eigen::Index>(grid.boundary_nodes().size());
  op.traction = InclusionOperator<R>::Matrix::Zero(R, 3 * nb);
  op.body = InclusionOperator<R>::Matrix::Zero(R, 2 * static_cast<Eigen::Index>(grid.size()));

  integrate_inclusion_boundary(
      inc, y, y_st, policy, [&](InclusionSegment seg) { return grid_breaks(grid, seg); },
      [&](InclusionSegment, double, const Vec2& st, const Vec2& x, const Vec2& n, double w) {
        const Block kw = kernel(y, x) * w;
        const CellWeights cw = grid.cell_weights(st.x(), st.y());
        for (int c = 0; c < 4; ++c) {
          if (cw.weight[c] == 0.0) continue;
          const int slot = grid.boundary_slot(static_cast<std::size_t>(cw.node[c]));
          if (slot < 0) continue;
          const double h = cw.weight[c];
          op.traction.col(3 * slot + 0) += kw.col(0) * (n.x() * h);
          op.traction.col(3 * slot + 1) += kw.col(1) * (n.y() * h);
          op.traction.col(3 * slot + 2) += (kw.col(0) * n.y() + kw.col(1) * n.x()) * h;
        }
      });

  Block mass = Block::Zero();
  const std::vector<double> knot_s = inc.merged_breakpoints();
  for (int j = 0; j + 1 < grid.n_t(); ++j) {
    for (int i = 0; i + 1 < grid.n_s(); ++i) {
      const ParamRect cell = grid.cell(i, j);
      std::vector<ParamRect> pieces = {cell};
      for (double kb : knot_s) {
        if (!(kb > cell.s0 + 1e-13 && kb < cell.s1 - 1e-13)) continue;
        const ParamRect last = pieces.back();
        pieces.back().s1 = kb;
        pieces.push_back({kb, last.s1, last.t0, last.t1});
      }
      integrate_inclusion_volume(inc, pieces, y, y_st, policy, [&](const AreaPoint& p) {
        const Block kw = kernel(y, p.x) * p.weight;
        if (own_node >= 0) mass += kw;
        const double a = std::clamp((p.s - cell.s0) / (cell.s1 - cell.s0), 0.0, 1.0);
        const double b = std::clamp((p.t - cell.t0) / (cell.t1 - cell.t0), 0.0, 1.0);
        const std::array<std::size_t, 4> nodes = {grid.index(i, j), grid.index(i + 1, j), grid.index(i + 1, j + 1),
                                                  grid.index(i, j + 1)};
        const std::array<double, 4> h = {(1 - a) * (1 - b), a * (1 - b), a * b, (1 - a) * b};
        for (int c = 0; c < 4; ++c) op.body.template middleCols<2>(2 * static_cast<Eigen::Index>(nodes[c])) += kw * h[c];
      });
    }
  }

  if (own_node >= 0) {
    if (R != 3) throw DomainError("the surface identity applies to the strain kernel only");
    if (grid.on_boundary(static_cast<std::size_t>(own_node)))
      throw DomainError("regularized volume term needs an interior grid node");
    Block surface = Block::Zero();
    integrate_inclusion_boundary(
        inc, y, std::nullopt, policy, [](InclusionSegment) { return std::vector<double>{}; },
        [&](InclusionSegment, double, const Vec2&, const Vec2& x, const Vec2& n, double w) {
          surface += kernel(y, x) * (n.dot(x - y) * w);
        });
    op.body.template middleCols<2>(2 * own_node) += surface - mass;
  }
  return op;
}

/// Unit kernel: integrating it gives plain resultants.
struct ResultantKernel {
  static constexpr int rows = 2;
  Mat2 operator()(const Vec2&, const Vec2&) const { return Mat2::Identity(); }
};

/// Resultant of the discrete initial-stress loads, surface tractions
/// sigma_p . n on the inclusion boundary plus body forces over its area,
/// integrated with the same interpolation as the inclusion operators. Zero
/// for exactly equilibrated loads.
inline Vec2 load_resultant(const Inclusion& inc, const FieldGrid& grid, const std::vector<Voigt>& initial_stress,
                           const std::vector<Vec2>& body_force) {
  QuadraturePolicy pol;
  pol.min_order = 12;
  const Vec2 far = inc.map(0.5, 0.5) + Vec2(1e3 * inc.scale(), 0.0);
  const auto op = build_inclusion_operator(far, inc, grid, ResultantKernel{}, std::nullopt, -1, pol);
  return op.apply(pack_boundary_stress(grid, initial_stress), pack_body_force(body_force));
}

/// Magnitude of the surface part of `load_resultant` computed from |t|, the
/// scale for relative equilibrium residuals.
inline double surface_load_magnitude(const Inclusion& inc, const FieldGrid& grid,
                                     const std::vector<Voigt>& initial_stress) {
  double m = 0.0;
  const QuadratureRule& rule = gauss_legendre(12);
  for (InclusionSegment seg : kInclusionSegments) {
    if (inc.segment_degenerate(seg)) continue;
    const std::vector<double> br = grid_breaks(grid, seg);
    for (std::size_t k = 0; k + 1 < br.size(); ++k) {
      const double h = 0.5 * (br[k + 1] - br[k]);
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const double u = br[k] + h * (1.0 + rule.points[q]);
        const auto [x, d] = inc.segment_point(seg, u);
        const Vec2 st = Inclusion::segment_to_st(seg, u);
        const Vec2 n = Vec2(d.y(), -d.x()) / d.norm();
        m += FieldGrid::traction(grid.interpolate(initial_stress, st.x(), st.y()), n).norm() * d.norm() *
             std::abs(h) * rule.weights[q];
      }
    }
  }
  return m;
}

}  // namespace igabem
