#pragma once

// Result files: iteration history, boundary values, line samples, grid dump
// (CSV) and the deformed boundary (SVG 1.1).

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "igabem/errors.hpp"
#include "igabem/model.hpp"
#include "igabem/solver.hpp"

namespace igabem {

inline void write_history_csv(std::ostream& os, const SolveResult& r) {
  os << "iteration,increment_norm,metric,residual,active_nodes,max_yield,max_displacement,probe_ux,probe_uy\n";
  for (const IterationRecord& h : r.history)
    os << h.iteration << ',' << format_number(h.increment_norm) << ',' << format_number(h.metric) << ','
       << format_number(h.residual) << ',' << h.active_nodes << ',' << format_number(h.max_yield) << ','
       << format_number(h.max_displacement) << ',' << format_number(h.probe_displacement.x()) << ','
       << format_number(h.probe_displacement.y()) << '\n';
}

/// Boundary values at `per_span` + 1 points of every knot span.
inline void write_boundary_csv(std::ostream& os, const BoundaryModel& bm, const BoundarySolution& s,
                               int per_span = 8) {
  os << "patch,u,x,y,nx,ny,ux,uy,tx,ty\n";
  for (std::size_t p = 0; p < bm.patches().size(); ++p) {
    const std::vector<double> br = bm.patches()[p].breakpoints();
    for (std::size_t k = 0; k + 1 < br.size(); ++k)
      for (int i = k == 0 ? 0 : 1; i <= per_span; ++i) {
        const double u = br[k] + (br[k + 1] - br[k]) * i / per_span;
        const auto v = bm.sample(s, static_cast<int>(p), u);
        os << bm.patches()[p].name << ',' << format_number(u) << ',' << format_number(v.x.x()) << ','
           << format_number(v.x.y()) << ',' << format_number(v.normal.x()) << ',' << format_number(v.normal.y())
           << ',' << format_number(v.displacement.x()) << ',' << format_number(v.displacement.y()) << ','
           << format_number(v.traction.x()) << ',' << format_number(v.traction.y()) << '\n';
      }
  }
}

/// Stresses along the sample line, three columns per iteration
/// (sxx_k, syy_k, txy_k): the corrected stress of iteration k. Iteration 1
/// starts from the elastic solution, so its columns are already corrected.
inline void write_line_csv(std::ostream& os, const std::vector<Vec2>& points, const SolveResult& r) {
  os << "point,x,y";
  for (std::size_t k = 1; k <= r.line_stress.size(); ++k) os << ",sxx_" << k << ",syy_" << k << ",txy_" << k;
  os << '\n';
  for (std::size_t l = 0; l < points.size(); ++l) {
    os << l << ',' << format_number(points[l].x()) << ',' << format_number(points[l].y());
    for (const auto& it : r.line_stress)
      for (int c = 0; c < 3; ++c) os << ',' << format_number(it[l](c));
    os << '\n';
  }
}

/// Per grid node: corrected stress and accumulated initial stress.
inline void write_grid_csv(std::ostream& os, const IterativeSolver& solver) {
  os << "inclusion,i,j,s,t,x,y,sx,sy,txy,s0x,s0y,t0xy\n";
  for (std::size_t n = 0; n < solver.states().size(); ++n) {
    const FieldGrid& g = solver.states()[n].grid;
    const std::string& name = solver.problem().inclusions[n].name();
    for (int j = 0; j < g.n_t(); ++j)
      for (int i = 0; i < g.n_s(); ++i) {
        const std::size_t k = g.index(i, j);
        const GridNode& nd = g.node(k);
        os << name << ',' << i << ',' << j << ',' << format_number(nd.s) << ',' << format_number(nd.t) << ','
           << format_number(nd.x.x()) << ',' << format_number(nd.x.y());
        for (int c = 0; c < 3; ++c) os << ',' << format_number(g.stress[k](c));
        for (int c = 0; c < 3; ++c) os << ',' << format_number(g.initial_stress[k](c));
        os << '\n';
      }
  }
}

/// Boundary polylines (one per patch) displaced by `magnification` * u.
inline std::vector<std::vector<Vec2>> boundary_outline(const BoundaryModel& bm, const BoundarySolution& s,
                                                       double magnification, int per_span = 16) {
  std::vector<std::vector<Vec2>> out;
  for (std::size_t p = 0; p < bm.patches().size(); ++p) {
    std::vector<Vec2> line;
    const std::vector<double> br = bm.patches()[p].breakpoints();
    for (std::size_t k = 0; k + 1 < br.size(); ++k)
      for (int i = k == 0 ? 0 : 1; i <= per_span; ++i) {
        const auto v = bm.sample(s, static_cast<int>(p), br[k] + (br[k + 1] - br[k]) * i / per_span);
        line.push_back(v.x + magnification * v.displacement);
      }
    out.push_back(std::move(line));
  }
  return out;
}

/// Magnification that makes the largest boundary displacement a tenth of
/// the model size; 1 when nothing moves.
inline double auto_magnification(const BoundaryModel& bm, const BoundarySolution& s) {
  double umax = 0.0;
  for (std::size_t n = 0; n < bm.point_count(); ++n) umax = std::max(umax, bm.point_displacement(s, n).norm());
  return umax > 0.0 ? 0.1 * bm.scale() / umax : 1.0;
}

/// Undeformed boundary in grey, deformed in black, inclusion outlines dashed.
inline void write_deformed_svg(std::ostream& os, const IterativeSolver& solver, double magnification) {
  const BoundaryModel& bm = solver.problem().boundary;
  const auto before = boundary_outline(bm, solver.solution(), 0.0);
  const auto after = boundary_outline(bm, solver.solution(), magnification);
  std::vector<std::vector<Vec2>> loops;
  for (const Inclusion& inc : solver.problem().inclusions) {
    std::vector<Vec2> loop;
    for (InclusionSegment seg : kInclusionSegments)
      for (int i = 0; i < 32; ++i) loop.push_back(inc.segment_point(seg, i / 32.0).first);
    loop.push_back(loop.front());
    loops.push_back(std::move(loop));
  }
  Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity()), hi = -lo;
  for (const auto* set : {&before, &after, &std::as_const(loops)})
    for (const auto& line : *set)
      for (const Vec2& x : line) {
        lo = lo.cwiseMin(x);
        hi = hi.cwiseMax(x);
      }
  const double size = std::max({hi.x() - lo.x(), hi.y() - lo.y(), 1e-300});
  const double k = 800.0 / size, margin = 20.0;
  const double w = (hi.x() - lo.x()) * k + 2 * margin, h = (hi.y() - lo.y()) * k + 2 * margin;
  auto points = [&](const std::vector<Vec2>& line) {
    std::string s;
    for (const Vec2& x : line) {
      if (!s.empty()) s += ' ';
      s += format_number((x.x() - lo.x()) * k + margin) + ',' + format_number((hi.y() - x.y()) * k + margin);
    }
    return s;
  };
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << format_number(w)
     << "\" height=\"" << format_number(h) << "\" viewBox=\"0 0 " << format_number(w) << ' ' << format_number(h)
     << "\">\n"
     << "<title>deformed boundary, magnification " << format_number(magnification) << "</title>\n";
  os << "<g id=\"undeformed\" fill=\"none\" stroke=\"#999999\" stroke-width=\"1\">\n";
  for (const auto& line : before) os << "<polyline points=\"" << points(line) << "\"/>\n";
  os << "</g>\n<g id=\"inclusions\" fill=\"none\" stroke=\"#3366cc\" stroke-width=\"1\" stroke-dasharray=\"4 3\">\n";
  for (const auto& line : loops) os << "<polyline points=\"" << points(line) << "\"/>\n";
  os << "</g>\n<g id=\"deformed\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1.5\">\n";
  for (const auto& line : after) os << "<polyline points=\"" << points(line) << "\"/>\n";
  os << "</g>\n</svg>\n";
}

/// Writes history.csv, boundary.csv, grid.csv, line.csv (when the problem
/// has line points) and deformed.svg into `dir`. A magnification of zero
/// picks one automatically. Returns the paths written.
inline std::vector<std::filesystem::path> export_results(const std::filesystem::path& dir,
                                                        const IterativeSolver& solver,
                                                        const SolveResult& result, double magnification = 0.0) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
  std::vector<std::filesystem::path> files;
  auto write = [&](const char* name, auto&& body) {
    const std::filesystem::path p = dir / name;
    std::ofstream os(p);
    if (!os) throw Error("cannot write '" + p.string() + "'");
    body(os);
    os.flush();
    if (!os) throw Error("failed writing '" + p.string() + "'");
    files.push_back(p);
  };
  write("history.csv", [&](std::ostream& os) { write_history_csv(os, result); });
  write("boundary.csv", [&](std::ostream& os) { write_boundary_csv(os, solver.problem().boundary, solver.solution()); });
  if (!solver.states().empty()) write("grid.csv", [&](std::ostream& os) { write_grid_csv(os, solver); });
  if (!solver.problem().line_points.empty())
    write("line.csv", [&](std::ostream& os) { write_line_csv(os, solver.problem().line_points, result); });
  const double mag =
      magnification > 0.0 ? magnification : auto_magnification(solver.problem().boundary, solver.solution());
  write("deformed.svg", [&](std::ostream& os) { write_deformed_svg(os, solver, mag); });
  return files;
}

}  // namespace igabem
