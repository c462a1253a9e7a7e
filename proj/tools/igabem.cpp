// igabem command line: solve model files or the bundled examples.
//
//   igabem solve <model> [--out DIR] [--tol X] [--max-iter N] [--grid NSxNT]
//                        [--line x0,y0,x1,y1,N] [--magnification M] [--quiet]
//   igabem fixtures list
//   igabem fixtures show <name>
//   igabem fixtures run <name> [same options as solve]
//
// Exit codes: 0 converged, 1 input or IO error, 2 no convergence.

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "igabem/igabem.hpp"

namespace {

using namespace igabem;

constexpr int kConverged = 0;
constexpr int kInputError = 1;
constexpr int kNotConverged = 2;

struct Overrides {
  std::string out;
  std::optional<double> tolerance;
  std::optional<int> max_iterations;
  std::string grid;
  std::string line;
  double magnification = 0.0;
  bool quiet = false;
};

std::vector<double> split_numbers(const std::string& text, char sep, const char* what) {
  std::vector<double> v;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find(sep, pos), text.size());
    double x = 0.0;
    const char* first = text.data() + pos;
    const char* last = text.data() + end;
    const auto r = std::from_chars(first, last, x);
    if (first == last || r.ec != std::errc() || r.ptr != last)
      throw ModelError(std::string("bad ") + what + " '" + text + "'");
    v.push_back(x);
    pos = end + 1;
  }
  return v;
}

void apply(const Overrides& o, ModelFile& m) {
  if (o.tolerance) {
    if (!(*o.tolerance > 0.0)) throw ModelError("--tol must be positive");
    m.iteration.tolerance = *o.tolerance;
  }
  if (o.max_iterations) {
    if (*o.max_iterations < 1) throw ModelError("--max-iter must be at least 1");
    m.iteration.max_iterations = *o.max_iterations;
  }
  if (!o.grid.empty()) {
    const std::vector<double> g = split_numbers(o.grid, 'x', "grid (expected NSxNT)");
    if (g.size() != 2 || g[0] != static_cast<int>(g[0]) || g[1] != static_cast<int>(g[1]))
      throw ModelError("bad grid '" + o.grid + "' (expected NSxNT)");
    set_grid(m, static_cast<int>(g[0]), static_cast<int>(g[1]));
  }
  if (!o.line.empty()) {
    const std::vector<double> v = split_numbers(o.line, ',', "line (expected x0,y0,x1,y1,N)");
    if (v.size() != 5 || v[4] != static_cast<int>(v[4]) || v[4] < 2)
      throw ModelError("bad line '" + o.line + "' (expected x0,y0,x1,y1,N with N >= 2)");
    m.outputs.line = LineSpec{{v[0], v[1]}, {v[2], v[3]}, static_cast<int>(v[4])};
  }
}

void add_options(CLI::App& cmd, Overrides& o) {
  cmd.add_option("--out", o.out, "output directory (default <name>-results)");
  cmd.add_option("--tol", o.tolerance, "convergence tolerance on the initial-stress increment");
  cmd.add_option("--max-iter", o.max_iterations, "iteration limit");
  cmd.add_option("--grid", o.grid, "grid of every inclusion, NSxNT");
  cmd.add_option("--line", o.line, "stress sample line x0,y0,x1,y1,N");
  cmd.add_option("--magnification", o.magnification, "deformed-shape magnification (0 = automatic)");
  cmd.add_flag("--quiet", o.quiet, "print only the summary");
}

int solve(ModelFile m, const std::string& name, const Overrides& o) {
  apply(o, m);
  const auto t0 = std::chrono::steady_clock::now();
  IterativeSolver solver(build_problem(m));
  const SolveResult r = solver.run();
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (!o.quiet) {
    std::printf("%5s  %12s  %12s  %7s  %12s  %12s\n", "iter", "increment", "metric", "active", "max_yield",
                "max_|u|");
    const std::size_t n = r.history.size();
    const std::size_t stride = std::max<std::size_t>(1, (n + 39) / 40);
    for (std::size_t k = 0; k < n; ++k) {
      if (k % stride != 0 && k + 1 != n) continue;
      const IterationRecord& h = r.history[k];
      std::printf("%5d  %12.5e  %12.6g  %7d  %12.5e  %12.6g\n", h.iteration, h.increment_norm, h.metric,
                  h.active_nodes, h.max_yield, h.max_displacement);
    }
  }
  for (const std::string& w : r.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  const IterationRecord& last = r.history.back();
  std::printf("%s: %s after %d iterations (%.2f s), increment %.3e, %s %.6g\n", name.c_str(),
              r.converged ? "converged" : "NOT converged", r.iterations, seconds, last.increment_norm,
              metric_name(m.iteration.metric), last.metric);
  if (solver.problem().probe)
    std::printf("probe (%g, %g): u = (%.6g, %.6g)\n", solver.problem().probe->x(), solver.problem().probe->y(),
                last.probe_displacement.x(), last.probe_displacement.y());

  const std::filesystem::path dir(o.out.empty() ? name + "-results" : o.out);
  const double mag = o.magnification > 0.0 ? o.magnification : m.outputs.magnification;
  for (const auto& p : export_results(dir, solver, r, mag)) std::printf("wrote %s\n", p.string().c_str());
  return r.converged ? kConverged : kNotConverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Isogeometric BEM for 2D elasticity with elastic and visco-plastic inclusions"};
  app.require_subcommand(1);

  Overrides solve_opts;
  std::string model_path;
  CLI::App* solve_cmd = app.add_subcommand("solve", "solve a model file");
  solve_cmd->add_option("model", model_path, "model file")->required();
  add_options(*solve_cmd, solve_opts);

  CLI::App* fixtures = app.add_subcommand("fixtures", "bundled examples");
  fixtures->require_subcommand(1);
  fixtures->add_subcommand("list", "list the bundled examples");
  std::string show_name;
  CLI::App* show = fixtures->add_subcommand("show", "print the model text of an example");
  show->add_option("name", show_name, "example name")->required();
  Overrides run_opts;
  std::string run_name;
  CLI::App* run = fixtures->add_subcommand("run", "solve a bundled example");
  run->add_option("name", run_name, "example name")->required();
  add_options(*run, run_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInputError;
  }

  try {
    if (*solve_cmd) {
      const std::filesystem::path p(model_path);
      return solve(load_model(model_path), p.stem().string(), solve_opts);
    }
    if (fixtures->got_subcommand("list")) {
      for (const Fixture& f : kFixtures)
        std::printf("%-12s %s\n", std::string(f.name).c_str(), std::string(f.description).c_str());
      return 0;
    }
    if (*show) {
      std::fputs(serialize_model(fixture_model(show_name)).c_str(), stdout);
      return 0;
    }
    if (*run) return solve(fixture_model(run_name), run_name, run_opts);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInputError;
  }
  return kInputError;
}
