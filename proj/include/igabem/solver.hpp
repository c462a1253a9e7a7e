#pragma once

// Initial-stress iteration. The elastic, homogeneous problem is solved once
// and factorized; every iteration evaluates strains at the inclusion grid
// nodes, turns the stress that the homogeneous solution cannot carry into an
// initial-stress increment, converts it into tractions on S0 and body forces
// in V0 and re-solves with the accumulated right-hand side F0.
//
// Sign convention: the accumulated initial stress sigma_p is relaxed out of
// the elastic stress, sigma = sigma_v + C eps - sigma_p. It acts like a
// traction sigma_p . n on S0 and a body force -div sigma_p in V0.

#include <algorithm>
#include <cmath>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "igabem/boundary.hpp"
#include "igabem/errors.hpp"
#include "igabem/field_grid.hpp"
#include "igabem/inclusion.hpp"
#include "igabem/material.hpp"
#include "igabem/volume_integration.hpp"

namespace igabem {

enum class ConvergenceMetric { initial_stress_norm, displacement_ratio, moment_ratio };

inline const char* metric_name(ConvergenceMetric m) {
  switch (m) {
    case ConvergenceMetric::initial_stress_norm: return "initial_stress_norm";
    case ConvergenceMetric::displacement_ratio: return "displacement_ratio";
    case ConvergenceMetric::moment_ratio: return "moment_ratio";
  }
  return "";
}

struct IterationConfig {
  int max_iterations = 50;
  /// Stop when max |d sigma_p| <= tolerance * max |sigma| of the elastic solution.
  double tolerance = 1e-3;
  ConvergenceMetric metric = ConvergenceMetric::initial_stress_norm;
  /// Displacement for displacement_ratio; external moment for moment_ratio
  /// (zero means computed from the boundary tractions above the section).
  double reference = 0.0;
  /// Inclusion and grid row whose nodes form the moment section (-1: middle row).
  int section_inclusion = 0;
  int section_row = -1;

  void validate() const {
    if (max_iterations < 1) throw ModelError("max_iterations must be at least 1");
    if (!(tolerance > 0.0)) throw ModelError("tolerance must be positive");
    if (metric == ConvergenceMetric::displacement_ratio && !(reference > 0.0))
      throw ModelError("displacement_ratio needs a positive reference displacement");
  }
};

struct Problem {
  BoundaryModel boundary;
  std::vector<Inclusion> inclusions;
  /// Virgin stress superposed on the perturbation (excavation problems).
  Voigt virgin_stress = Voigt::Zero();
  IterationConfig iteration;
  /// Points where stresses are sampled every iteration.
  std::vector<Vec2> line_points;
  /// Boundary point whose displacement is reported every iteration.
  std::optional<Vec2> probe;
};

struct IterationRecord {
  int iteration = 0;
  /// max |d sigma_p| relative to the elastic stress scale.
  double increment_norm = 0.0;
  double metric = 0.0;
  double residual = 0.0;
  int active_nodes = 0;
  /// Largest yield function value at the grid nodes, relative to the yield
  /// scale, for the stress before this iteration's relaxation step.
  double max_yield = 0.0;
  double max_displacement = 0.0;
  Vec2 probe_displacement = Vec2::Zero();
};

/// Trapezoidal moment of a normal stress distribution about `centre`:
/// sum of sigma (x - centre) dx over the sampled section.
inline double section_moment(const std::vector<double>& x, const std::vector<double>& sigma, double centre) {
  if (x.size() != sigma.size()) throw DomainError("section sample sizes differ");
  double m = 0.0;
  for (std::size_t k = 0; k + 1 < x.size(); ++k)
    m += 0.5 * (x[k + 1] - x[k]) * (sigma[k] * (x[k] - centre) + sigma[k + 1] * (x[k + 1] - centre));
  return m;
}

/// Per-inclusion iteration state.
struct InclusionState {
  FieldGrid grid;
  std::vector<Voigt> strain;
  std::vector<Voigt> viscoplastic_strain;
  /// Accumulated body force -div sigma_p (sum of masked increments).
  std::vector<Vec2> body_force;
};

struct SolveResult {
  bool converged = false;
  int iterations = 0;
  std::vector<IterationRecord> history;
  std::vector<std::string> warnings;
  /// Stress at the line points, one entry per iteration.
  std::vector<std::vector<Voigt>> line_stress;
  double elastic_stress_scale = 0.0;
  double external_moment = 0.0;
};

class IterativeSolver {
 public:
  explicit IterativeSolver(Problem problem) : problem_(std::move(problem)), system_(problem_.boundary) {
    problem_.iteration.validate();
    const std::size_t ni = problem_.inclusions.size();
    if (problem_.iteration.metric == ConvergenceMetric::moment_ratio &&
        (problem_.iteration.section_inclusion < 0 || problem_.iteration.section_inclusion >= static_cast<int>(ni)))
      throw ModelError("moment section refers to a missing inclusion");
    kernels_ = Kernels(problem_.boundary.material());
    c_domain_ = constitutive(problem_.boundary.material());
    states_.resize(ni);
    for (const Inclusion& inc : problem_.inclusions) yields_.push_back(inc.yield());
    for (std::size_t i = 0; i < ni; ++i) {
      InclusionState& st = states_[i];
      st.grid = FieldGrid(problem_.inclusions[i]);
      st.strain.assign(st.grid.size(), Voigt::Zero());
      st.viscoplastic_strain.assign(st.grid.size(), Voigt::Zero());
      st.body_force.assign(st.grid.size(), Vec2::Zero());
      if (st.grid.n_s() < 3 || st.grid.n_t() < 3)
        throw ModelError("inclusion '" + problem_.inclusions[i].name() + "' needs at least 3x3 grid nodes");
    }
    check_overlap();
    precompute();
  }

  IterativeSolver(const IterativeSolver&) = delete;
  IterativeSolver& operator=(const IterativeSolver&) = delete;

  const Problem& problem() const { return problem_; }
  /// Yield models with automatic cap limits resolved after the first solve.
  const std::vector<YieldModel>& yields() const { return yields_; }
  const BoundarySystem& system() const { return system_; }
  const BoundarySolution& solution() const { return solution_; }
  const std::vector<InclusionState>& states() const { return states_; }
  const Eigen::VectorXd& f0() const { return f0_; }

  SolveResult run() {
    const IterationConfig& cfg = problem_.iteration;
    SolveResult result;
    f0_ = Eigen::VectorXd::Zero(2 * static_cast<Eigen::Index>(problem_.boundary.point_count()));
    for (InclusionState& st : states_) {
      st.grid.clear_fields();
      std::fill(st.viscoplastic_strain.begin(), st.viscoplastic_strain.end(), Voigt::Zero());
      std::fill(st.body_force.begin(), st.body_force.end(), Vec2::Zero());
    }
    solution_ = system_.solve();
    double residual = system_.last_residual();
    int growth = 0;
    double previous_norm = -1.0;
    for (int it = 1; it <= cfg.max_iterations; ++it) {
      update_strains();
      if (it == 1) {
        stress_scale_ = elastic_stress_scale();
        resolve_auto_limits();
        result.elastic_stress_scale = stress_scale_;
      }
      IterationRecord rec;
      rec.iteration = it;
      rec.residual = residual;
      double max_inc = 0.0;
      for (std::size_t i = 0; i < states_.size(); ++i) max_inc = std::max(max_inc, compute_increment(i, rec));
      rec.increment_norm = stress_scale_ > 0.0 ? max_inc / stress_scale_ : max_inc;
      record_outputs(rec, result);
      result.history.push_back(rec);
      result.iterations = it;
      if (rec.increment_norm <= cfg.tolerance) {
        result.converged = true;
        break;
      }
      if (previous_norm >= 0.0 && rec.increment_norm > previous_norm) {
        if (++growth == 3)
          result.warnings.push_back("initial-stress increments grew for 3 iterations (iteration " +
                                    std::to_string(it) + "); the time step may be too large");
      } else {
        growth = 0;
      }
      previous_norm = rec.increment_norm;
      if (it == cfg.max_iterations) break;
      apply_increment();
      solution_ = system_.solve(f0_);
      residual = system_.last_residual();
    }
    if (!result.converged)
      result.warnings.push_back("no convergence within " + std::to_string(cfg.max_iterations) + " iterations");
    result.external_moment = external_moment_;
    return result;
  }

  /// Displacement at an internal point, inclusion terms included.
  Vec2 internal_displacement(const Vec2& y) const {
    Vec2 u = problem_.boundary.displacement_operator(y).apply(solution_);
    for (std::size_t j = 0; j < states_.size(); ++j) {
      const auto op = build_inclusion_operator(y, problem_.inclusions[j], states_[j].grid, DisplacementKernel{&kernels_},
                                               inclusion_parameters(problem_.inclusions[j], y), -1,
                                               problem_.boundary.policy());
      u += apply_inclusion(op, j);
    }
    return u;
  }

  /// Strain at an internal point, inclusion terms included.
  Voigt internal_strain(const Vec2& y) const {
    Voigt e = problem_.boundary.strain_operator(y).apply(solution_);
    for (std::size_t j = 0; j < states_.size(); ++j) {
      const auto op = build_inclusion_operator(y, problem_.inclusions[j], states_[j].grid, StrainKernel{&kernels_},
                                               inclusion_parameters(problem_.inclusions[j], y), -1,
                                               problem_.boundary.policy());
      e += apply_inclusion(op, j);
    }
    return e;
  }

  /// Stress at an internal point: virgin stress + C eps - sigma_p, with
  /// sigma_p interpolated from the grid of the inclusion holding y.
  Voigt internal_stress(const Vec2& y) const { return stress_from_strain(y, internal_strain(y)); }

 private:
  template <int R>
  Eigen::Matrix<double, R, 1> apply_inclusion(const InclusionOperator<R>& op, std::size_t j) const {
    const InclusionState& st = states_[j];
    return op.apply(pack_boundary_stress(st.grid, st.grid.initial_stress), pack_body_force(st.body_force));
  }

  Voigt stress_from_strain(const Vec2& y, const Voigt& eps) const {
    Voigt s = problem_.virgin_stress + c_domain_ * eps;
    for (std::size_t j = 0; j < states_.size(); ++j) {
      const auto st = inclusion_parameters(problem_.inclusions[j], y);
      if (st) s -= states_[j].grid.interpolate(states_[j].grid.initial_stress, st->x(), st->y());
    }
    return s;
  }

  void check_overlap() const {
    for (std::size_t i = 0; i < states_.size(); ++i)
      for (std::size_t j = 0; j < states_.size(); ++j) {
        if (i == j) continue;
        const FieldGrid& g = states_[i].grid;
        for (std::size_t k = 0; k < g.size(); ++k) {
          if (g.on_boundary(k)) continue;
          const auto st = inclusion_parameters(problem_.inclusions[j], g.node(k).x);
          if (st) throw ModelError("inclusions '" + problem_.inclusions[i].name() + "' and '" +
                                   problem_.inclusions[j].name() + "' overlap");
        }
      }
  }

  struct NodeOperators {
    BoundaryOperator<3> boundary;
    std::vector<InclusionOperator<3>> inclusions;
  };

  void precompute() {
    const BoundaryModel& bm = problem_.boundary;
    const QuadraturePolicy& pol = bm.policy();
    const std::size_t ni = states_.size();
    // targets: interior grid nodes of every inclusion
    struct Target {
      std::size_t inclusion;
      std::size_t node;
    };
    std::vector<Target> targets;
    node_ops_.resize(ni);
    for (std::size_t i = 0; i < ni; ++i) {
      node_ops_[i].resize(states_[i].grid.size());
      for (std::size_t k = 0; k < states_[i].grid.size(); ++k)
        if (!states_[i].grid.on_boundary(k)) targets.push_back({i, k});
    }
    const std::size_t np = bm.point_count();
    colloc_ops_.assign(np, std::vector<InclusionOperator<2>>(ni));
    line_ops_.resize(problem_.line_points.size());
    const auto nt = static_cast<long>(targets.size());
    const auto nl = static_cast<long>(problem_.line_points.size());
    const long total = nt + static_cast<long>(np) + nl;
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (long w = 0; w < total; ++w) {
      try {
        if (w < nt) {
          const Target& tg = targets[static_cast<std::size_t>(w)];
          const FieldGrid& g = states_[tg.inclusion].grid;
          const Vec2 y = g.node(tg.node).x;
          NodeOperators ops;
          ops.boundary = bm.strain_operator(y);
          for (std::size_t j = 0; j < ni; ++j) {
            const bool own = j == tg.inclusion;
            const std::optional<Vec2> st =
                own ? std::optional<Vec2>(Vec2(g.node(tg.node).s, g.node(tg.node).t))
                    : inclusion_parameters(problem_.inclusions[j], y);
            ops.inclusions.push_back(build_inclusion_operator(y, problem_.inclusions[j], states_[j].grid,
                                                              StrainKernel{&kernels_}, st,
                                                              own ? static_cast<int>(tg.node) : -1, pol));
          }
          node_ops_[tg.inclusion][tg.node] = std::move(ops);
        } else if (w < nt + static_cast<long>(np)) {
          const auto n = static_cast<std::size_t>(w - nt);
          const Vec2 y = bm.points()[n].y;
          for (std::size_t j = 0; j < ni; ++j)
            colloc_ops_[n][j] =
                build_inclusion_operator(y, problem_.inclusions[j], states_[j].grid, DisplacementKernel{&kernels_},
                                         inclusion_parameters(problem_.inclusions[j], y), -1, pol);
        } else {
          const auto l = static_cast<std::size_t>(w - nt - static_cast<long>(np));
          const Vec2 y = problem_.line_points[l];
          NodeOperators ops;
          ops.boundary = bm.strain_operator(y);
          for (std::size_t j = 0; j < ni; ++j)
            ops.inclusions.push_back(build_inclusion_operator(y, problem_.inclusions[j], states_[j].grid,
                                                              StrainKernel{&kernels_},
                                                              inclusion_parameters(problem_.inclusions[j], y), -1,
                                                              pol));
          line_ops_[l] = std::move(ops);
        }
      } catch (...) {
#pragma omp critical
        failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
    if (problem_.probe) probe_ = bm.closest_point(*problem_.probe);
    find_surface_nodes();
  }

  // Grid nodes of S0 that lie on a traction-loaded part of S. Their strain
  // comes from the boundary solution instead of extrapolation, which amplifies
  // errors there; where the traction is an unknown it is too coarse near the
  // inclusion edge, so those nodes keep the extrapolated value. The patch
  // parameter is nudged towards a neighbouring node on S so that spans meeting
  // at a kink or C0 knot are read from the inclusion side.
  struct SurfaceNode {
    std::size_t node;
    int patch;
    double u;
  };

  void find_surface_nodes() {
    const BoundaryModel& bm = problem_.boundary;
    const double tol = 1e-9 * bm.scale();
    surface_nodes_.assign(states_.size(), {});
    for (std::size_t i = 0; i < states_.size(); ++i) {
      const FieldGrid& g = states_[i].grid;
      auto on_s = [&](int a, int b) {
        return a >= 0 && b >= 0 && a < g.n_s() && b < g.n_t() &&
               g.on_boundary(g.index(a, b)) && bm.closest_point(g.node(g.index(a, b)).x).distance <= tol;
      };
      for (int b = 0; b < g.n_t(); ++b)
        for (int a = 0; a < g.n_s(); ++a) {
          if (!on_s(a, b)) continue;
          const std::size_t k = g.index(a, b);
          for (const auto& [da, db] : {std::pair{0, 1}, std::pair{0, -1}, std::pair{1, 0}, std::pair{-1, 0}}) {
            if (!on_s(a + da, b + db)) continue;
            const Vec2 x = g.node(k).x + 1e-6 * (g.node(g.index(a + da, b + db)).x - g.node(k).x);
            const auto cp = bm.closest_point(x);
            const Patch& pt = bm.patches()[static_cast<std::size_t>(cp.patch)];
            if (pt.bc[0].type == BcType::traction && pt.bc[1].type == BcType::traction)
              surface_nodes_[i].push_back({k, cp.patch, cp.u});
            break;
          }
        }
    }
  }

  // Strain at a point of S from the boundary solution: the tangential strain
  // from the displacement slope and the traction relation (C eps - sigma0) n = t.
  Voigt surface_strain(const SurfaceNode& sn, const Voigt& initial_stress) const {
    const auto smp = problem_.boundary.sample(solution_, sn.patch, sn.u);
    const Vec2& tau = smp.tangent;
    const Vec2& n = smp.normal;
    Eigen::Matrix<double, 2, 3> traction_of;
    traction_of << n.x(), 0.0, n.y(), 0.0, n.y(), n.x();
    Mat3 a;
    a.row(0) << tau.x() * tau.x(), tau.y() * tau.y(), tau.x() * tau.y();
    a.bottomRows<2>() = traction_of * c_domain_;
    Voigt rhs;
    rhs << tau.dot(smp.slope), smp.traction + traction_of * initial_stress;
    return a.partialPivLu().solve(rhs);
  }

  Voigt evaluate(const NodeOperators& ops) const {
    Voigt e = ops.boundary.apply(solution_);
    for (std::size_t j = 0; j < states_.size(); ++j) e += apply_inclusion(ops.inclusions[j], j);
    return e;
  }

  void update_strains() {
    // packed inclusion fields once per iteration
    std::vector<Eigen::VectorXd> ts(states_.size()), bs(states_.size());
    for (std::size_t j = 0; j < states_.size(); ++j) {
      ts[j] = pack_boundary_stress(states_[j].grid, states_[j].grid.initial_stress);
      bs[j] = pack_body_force(states_[j].body_force);
    }
    for (std::size_t i = 0; i < states_.size(); ++i) {
      InclusionState& st = states_[i];
      const auto n = static_cast<long>(st.grid.size());
#pragma omp parallel for
      for (long k = 0; k < n; ++k) {
        if (st.grid.on_boundary(static_cast<std::size_t>(k))) continue;
        const NodeOperators& ops = node_ops_[i][static_cast<std::size_t>(k)];
        Voigt e = ops.boundary.apply(solution_);
        for (std::size_t j = 0; j < states_.size(); ++j) e += ops.inclusions[j].apply(ts[j], bs[j]);
        st.strain[static_cast<std::size_t>(k)] = e;
      }
      st.grid.extrapolate_to_boundary(st.strain);
      for (const SurfaceNode& sn : surface_nodes_[i])
        st.strain[sn.node] = surface_strain(sn, st.grid.initial_stress[sn.node]);
    }
  }

  double elastic_stress_scale() const {
    double m = 0.0;
    for (const InclusionState& st : states_)
      for (std::size_t k = 0; k < st.grid.size(); ++k)
        m = std::max(m, (problem_.virgin_stress + c_domain_ * st.strain[k]).cwiseAbs().maxCoeff());
    return m;
  }

  void resolve_auto_limits() {
    for (std::size_t i = 0; i < states_.size(); ++i) {
      YieldModel& y = yields_[i];
      if (y.kind != YieldKind::normal_cap || !(y.auto_fraction > 0.0)) continue;
      double m = 0.0;
      for (std::size_t k = 0; k < states_[i].grid.size(); ++k) {
        const double v = (problem_.virgin_stress + c_domain_ * states_[i].strain[k])(y.cap_component);
        m = std::max(m, y.cap_mode == CapMode::both ? std::abs(v) : v);
      }
      if (!(m > 0.0))
        throw ModelError("inclusion '" + problem_.inclusions[i].name() +
                         "': automatic cap limit needs a nonzero elastic stress of the capped sign");
      y.limit = y.auto_fraction * m;
    }
  }

  // Fills grid.increment and grid.stress (corrected stress) of inclusion i;
  // returns max |increment|.
  double compute_increment(std::size_t i, IterationRecord& rec) {
    InclusionState& st = states_[i];
    const Inclusion& inc = problem_.inclusions[i];
    const Mat3 ci = constitutive(inc.material());
    const Mat3 dc = c_domain_ - ci;
    const YieldModel& ym = yields_[i];
    const double oop = inc.material().out_of_plane_factor();
    double max_inc = 0.0;
    for (std::size_t k = 0; k < st.grid.size(); ++k) {
      const Voigt& eps = st.strain[k];
      Voigt& evp = st.viscoplastic_strain[k];
      if (ym.active()) {
        const Voigt trial = problem_.virgin_stress + ci * (eps - evp);
        rec.max_yield = std::max(rec.max_yield, yield_value(trial, ym, oop) / std::max(ym.scale(), 1e-300));
        evp += viscoplastic_step(trial, ym, Mat3::Identity(), oop);
      }
      const Voigt target = dc * eps + ci * evp;
      Voigt inc_k = target - st.grid.initial_stress[k];
      // drop round-off sized increments so the active mask stays meaningful
      for (int c = 0; c < 3; ++c)
        if (std::abs(inc_k(c)) <= 1e-14 * std::max(stress_scale_, 1e-300)) inc_k(c) = 0.0;
      st.grid.increment[k] = inc_k;
      st.grid.active[k] = inc_k.cwiseAbs().maxCoeff() > 0.0;
      st.grid.stress[k] = problem_.virgin_stress + c_domain_ * eps - target;
      max_inc = std::max(max_inc, inc_k.cwiseAbs().maxCoeff());
      if (st.grid.active[k]) ++rec.active_nodes;
    }
    return max_inc;
  }

  void apply_increment() {
    std::vector<Eigen::VectorXd> ts(states_.size()), bs(states_.size());
    for (std::size_t j = 0; j < states_.size(); ++j) {
      InclusionState& st = states_[j];
      const std::vector<Vec2> b = st.grid.body_forces(st.grid.increment);
      ts[j] = pack_boundary_stress(st.grid, st.grid.increment);
      bs[j] = pack_body_force(b);
      for (std::size_t k = 0; k < st.grid.size(); ++k) {
        st.grid.initial_stress[k] += st.grid.increment[k];
        st.body_force[k] += b[k];
      }
    }
    for (std::size_t n = 0; n < colloc_ops_.size(); ++n)
      for (std::size_t j = 0; j < states_.size(); ++j) f0_.segment<2>(2 * n) += colloc_ops_[n][j].apply(ts[j], bs[j]);
  }

  void record_outputs(IterationRecord& rec, SolveResult& result) {
    const BoundaryModel& bm = problem_.boundary;
    for (std::size_t n = 0; n < bm.point_count(); ++n)
      rec.max_displacement = std::max(rec.max_displacement, bm.point_displacement(solution_, n).norm());
    if (probe_.patch >= 0) rec.probe_displacement = bm.sample(solution_, probe_.patch, probe_.u).displacement;
    const IterationConfig& cfg = problem_.iteration;
    switch (cfg.metric) {
      case ConvergenceMetric::initial_stress_norm:
        rec.metric = rec.increment_norm;
        break;
      case ConvergenceMetric::displacement_ratio:
        rec.metric = rec.max_displacement / cfg.reference;
        break;
      case ConvergenceMetric::moment_ratio: {
        const double m = internal_moment();
        if (rec.iteration == 1) external_moment_ = cfg.reference != 0.0 ? cfg.reference : external_moment();
        rec.metric = external_moment_ != 0.0 ? m / external_moment_ : 0.0;
        break;
      }
    }
    std::vector<Voigt> line(problem_.line_points.size());
    for (std::size_t l = 0; l < line.size(); ++l)
      line[l] = stress_from_strain(problem_.line_points[l], evaluate(line_ops_[l])) - pending_increment(problem_.line_points[l]);
    result.line_stress.push_back(std::move(line));
  }

  // Interpolated pending increment at y (zero outside inclusions), so that
  // sampled stresses match the corrected grid stresses.
  Voigt pending_increment(const Vec2& y) const {
    Voigt s = Voigt::Zero();
    for (std::size_t j = 0; j < states_.size(); ++j) {
      const auto st = inclusion_parameters(problem_.inclusions[j], y);
      if (st) s += states_[j].grid.interpolate(states_[j].grid.increment, st->x(), st->y());
    }
    return s;
  }

  int section_row() const {
    const FieldGrid& g = states_[problem_.iteration.section_inclusion].grid;
    const int r = problem_.iteration.section_row;
    if (r < 0) return g.n_t() / 2;
    if (r >= g.n_t()) throw ModelError("moment section row outside the inclusion grid");
    return r;
  }

  /// Moment of the corrected sigma_y along the section row about its midpoint.
  double internal_moment() const {
    const FieldGrid& g = states_[problem_.iteration.section_inclusion].grid;
    const int j = section_row();
    std::vector<double> x, s;
    for (int i = 0; i < g.n_s(); ++i) {
      const std::size_t k = g.index(i, j);
      x.push_back(g.node(k).x.x());
      s.push_back(g.stress[k](1) - problem_.virgin_stress(1));
    }
    const double y0 = g.node(g.index(0, j)).x.y(), y1 = g.node(g.index(g.n_s() - 1, j)).x.y();
    if (std::abs(y1 - y0) > 1e-9 * std::max(1.0, std::abs(x.back() - x.front())))
      throw ModelError("moment section row must be horizontal");
    return section_moment(x, s, 0.5 * (x.front() + x.back()));
  }

  /// Moment about the section midpoint of the boundary tractions on the part
  /// of S above the section.
  double external_moment() const {
    const FieldGrid& g = states_[problem_.iteration.section_inclusion].grid;
    const int j = section_row();
    const Vec2 a = g.node(g.index(0, j)).x, b = g.node(g.index(g.n_s() - 1, j)).x;
    const double ys = a.y(), xc = 0.5 * (a.x() + b.x());
    const BoundaryModel& bm = problem_.boundary;
    const QuadratureRule& rule = gauss_legendre(20);
    double m = 0.0;
    for (std::size_t p = 0; p < bm.patches().size(); ++p) {
      const Patch& pt = bm.patches()[p];
      std::vector<double> br = pt.breakpoints();
      // add crossings of the section line
      std::vector<double> cuts = br;
      for (std::size_t k = 0; k + 1 < br.size(); ++k) {
        constexpr int samples = 32;
        for (int i = 0; i < samples; ++i) {
          double lo = br[k] + (br[k + 1] - br[k]) * i / samples, hi = br[k] + (br[k + 1] - br[k]) * (i + 1) / samples;
          const double flo = pt.geometry.evaluate(lo).y() - ys, fhi = pt.geometry.evaluate(hi).y() - ys;
          if (flo * fhi >= 0.0) continue;
          for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (lo + hi);
            ((pt.geometry.evaluate(mid).y() - ys) * flo > 0.0 ? lo : hi) = mid;
          }
          cuts.push_back(0.5 * (lo + hi));
        }
      }
      std::sort(cuts.begin(), cuts.end());
      for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double u0 = cuts[k], u1 = cuts[k + 1];
        if (!(u1 > u0)) continue;
        if (pt.geometry.evaluate(0.5 * (u0 + u1)).y() <= ys) continue;
        const double h = 0.5 * (u1 - u0);
        for (std::size_t q = 0; q < rule.size(); ++q) {
          const double u = u0 + h * (1.0 + rule.points[q]);
          const auto smp = bm.sample(solution_, static_cast<int>(p), u);
          const double ds = pt.geometry.derivative(u).norm() * h * rule.weights[q];
          m += ((smp.x.x() - xc) * smp.traction.y() - (smp.x.y() - ys) * smp.traction.x()) * ds;
        }
      }
    }
    return m;
  }

  Problem problem_;
  BoundarySystem system_;
  Kernels kernels_;
  Mat3 c_domain_ = Mat3::Zero();
  std::vector<InclusionState> states_;
  std::vector<YieldModel> yields_;
  std::vector<std::vector<NodeOperators>> node_ops_;
  std::vector<std::vector<InclusionOperator<2>>> colloc_ops_;
  std::vector<NodeOperators> line_ops_;
  BoundaryModel::ClosestPoint probe_;
  std::vector<std::vector<SurfaceNode>> surface_nodes_;
  BoundarySolution solution_;
  Eigen::VectorXd f0_;
  double stress_scale_ = 0.0;
  double external_moment_ = 0.0;
};

}  // namespace igabem
