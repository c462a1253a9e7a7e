// Acceptance checks for the bundled examples and the property suite. One
// PASS/FAIL line per criterion; `igabem_acceptance N` runs criterion N only.
// `--dump-cavern-pin` prints the cavern displacement table pinned below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "igabem/igabem.hpp"

using namespace igabem;

namespace {

constexpr double kPi = std::numbers::pi;

class Criterion {
 public:
  Criterion(int id, std::string title) : id_(id), title_(std::move(title)), start_(std::chrono::steady_clock::now()) {}

  // Records a sub-check; `detail` is printed either way.
  void check(bool ok, const std::string& detail) {
    ok_ = ok_ && ok;
    details_.push_back(std::string(ok ? "" : "FAILED ") + detail);
  }

  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  bool report() const {
    std::printf("%s  [%d] %s\n", ok_ ? "PASS" : "FAIL", id_, title_.c_str());
    for (const std::string& d : details_) std::printf("        %s\n", d.c_str());
    std::fflush(stdout);
    return ok_;
  }

 private:
  int id_;
  std::string title_;
  std::chrono::steady_clock::time_point start_;
  bool ok_ = true;
  std::vector<std::string> details_;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Largest principal-stress form of Mohr-Coulomb with the out-of-plane stress
// nu (sxx + syy), tension positive.
double mohr_coulomb_oracle(const Voigt& s, double phi_deg, double c, double nu) {
  const double mean = 0.5 * (s(0) + s(1)), r = std::hypot(0.5 * (s(0) - s(1)), s(2));
  const double p[3] = {mean + r, mean - r, nu * (s(0) + s(1))};
  const double hi = *std::max_element(p, p + 3), lo = *std::min_element(p, p + 3);
  const double sp = std::sin(phi_deg * kPi / 180.0);
  return hi * (1.0 + sp) - lo * (1.0 - sp) - 2.0 * c * std::cos(phi_deg * kPi / 180.0);
}

// ---------------------------------------------------------------- test 1

bool criterion_test1() {
  Criterion c(1, "test1: soft elastic layer, displacement ratio within 1 +- 0.005 by iteration 10, < 10 s");
  // nu = 0 column fixed at the bottom under sigma_y = x - 1/2: u_y(1,1) = 0.5 int 1/E dy,
  // u_x(1,1) = -int_0^1 int_0^y 1/E, with E = 1/2 on 0.33 < y < 0.66
  const double a = 0.33, b = 0.66;
  const double uy = 0.5 * (a + 2.0 * (b - a) + (1.0 - b));
  const double g_b = a + 2.0 * (b - a);
  const double ux = -(0.5 * a * a + (a * (b - a) + (b - a) * (b - a)) + (g_b * (1.0 - b) + 0.5 * (1.0 - b) * (1.0 - b)));
  const double exact = std::hypot(ux, uy);

  IterativeSolver s(build_problem(fixture_model("test1")));
  const SolveResult r = s.run();
  c.check(std::abs(s.problem().iteration.reference - exact) <= 1e-12 * exact,
          fmt("reference %.12g, layered-column value %.12g", s.problem().iteration.reference, exact));
  int first = 0;
  for (const IterationRecord& h : r.history)
    if (!first && std::abs(h.max_displacement / exact - 1.0) <= 0.005) first = h.iteration;
  std::string trace;
  for (const IterationRecord& h : r.history) trace += fmt(" %.5f", h.max_displacement / exact);
  c.check(first >= 1 && first <= 10, fmt("first iteration within 0.005: %d (ratios:%s)", first, trace.c_str()));
  c.check(c.seconds() < 10.0, fmt("runtime %.2f s", c.seconds()));
  return c.report();
}

// ---------------------------------------------------------------- test 2

bool criterion_test2() {
  Criterion c(2, "test2: 80% cap, moment ratio within 1 +- 0.01 by iteration 12, F <= 1e-3 limit, < 30 s");
  IterativeSolver s(build_problem(fixture_model("test2")));
  const SolveResult r = s.run();

  // the elastic section stress is x - 1/2 (same stiffness), so the cap is 0.4
  // and the external moment int (x - 1/2)^2 dx = 1/12
  const double limit = s.yields()[0].limit;
  c.check(std::abs(limit - 0.4) <= 5e-3 * 0.4, fmt("cap limit %.6g (elastic value 0.4)", limit));

  int first = 0;
  for (const IterationRecord& h : r.history)
    if (!first && std::abs(h.metric - 1.0) <= 0.01) first = h.iteration;
  c.check(first >= 1 && first <= 12,
          fmt("first iteration within 0.01: %d; final ratio %.5f after %d iterations", first, r.history.back().metric,
              r.iterations));

  // independent trapezoid of the middle grid row against 1/12
  const FieldGrid& g = s.states()[0].grid;
  const int j = g.n_t() / 2;
  double m = 0.0;
  for (int i = 0; i + 1 < g.n_s(); ++i) {
    const std::size_t k0 = g.index(i, j), k1 = g.index(i + 1, j);
    const double x0 = g.node(k0).x.x(), x1 = g.node(k1).x.x();
    m += 0.5 * (x1 - x0) * (g.stress[k0](1) * (x0 - 0.5) + g.stress[k1](1) * (x1 - 0.5));
  }
  c.check(std::abs(m * 12.0 - r.history.back().metric) <= 1e-3,
          fmt("section moment / (1/12) = %.5f, reported %.5f", m * 12.0, r.history.back().metric));

  c.check(r.converged, fmt("converged: %s", r.converged ? "yes" : "no"));
  double fmax = -1e300;
  for (std::size_t k = 0; k < g.size(); ++k) fmax = std::max(fmax, std::abs(g.stress[k](1)) - limit);
  c.check(fmax <= 1e-3 * limit, fmt("max |sigma_y| - limit = %.3e (bound %.3e)", fmax, 1e-3 * limit));
  c.check(c.seconds() < 30.0, fmt("runtime %.2f s", c.seconds()));
  return c.report();
}

// ---------------------------------------------------------------- test 3

bool criterion_test3() {
  Criterion c(3, "test3: hole, tension cap 0.5, 30 vs 40 grid < 0.5%, line sigma_y <= 0.505 where plastic, < 60 s");
  double top[2] = {0.0, 0.0};
  const char* names[2] = {"test3", "test3_fine"};
  for (int run = 0; run < 2; ++run) {
    // construction included: the operators are most of the work here
    const auto t0 = std::chrono::steady_clock::now();
    IterativeSolver s(build_problem(fixture_model(names[run])));
    const SolveResult r = s.run();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    top[run] = r.history.back().probe_displacement.y();
    const FieldGrid& g = s.states()[0].grid;
    c.check(r.converged, fmt("%s (%dx%d): %s in %d iterations, top u_y %.7g, %.1f s", names[run], g.n_s(), g.n_t(),
                             r.converged ? "converged" : "NOT converged", r.iterations, top[run], secs));
    c.check(secs < 60.0, fmt("%s runtime %.1f s", names[run], secs));

    double fmax = -1e300;
    for (std::size_t k = 0; k < g.size(); ++k) fmax = std::max(fmax, g.stress[k](1) - 0.5);
    c.check(fmax <= 1e-3 * 0.5, fmt("%s grid nodes: max sigma_y - 0.5 = %.3e", names[run], fmax));

    // line points inside the layer with non-zero visco-plastic strain
    const Inclusion& inc = s.problem().inclusions[0];
    const std::vector<Voigt>& last = r.line_stress.back();
    double worst = -1e300, worst_y = 0.0;
    int plastic = 0;
    for (std::size_t l = 0; l < last.size(); ++l) {
      const Vec2 y = s.problem().line_points[l];
      const auto st = inclusion_parameters(inc, y);
      if (!st) continue;
      if (g.interpolate(s.states()[0].viscoplastic_strain, st->x(), st->y()).norm() == 0.0) continue;
      ++plastic;
      if (last[l](1) > worst) {
        worst = last[l](1);
        worst_y = y.y();
      }
    }
    c.check(plastic > 0 && worst <= 0.5 * (1.0 + 1e-2),
            fmt("%s line: %d plastic points, max sigma_y %.4f at y = %.3f (bound 0.505)", names[run], plastic, worst,
                worst_y));
  }
  const double diff = std::abs(top[1] - top[0]) / std::abs(top[1]);
  c.check(diff < 0.005, fmt("top u_y 30x8 %.7g vs 40x10 %.7g: %.3f%% (bound 0.5%%)", top[0], top[1], 100.0 * diff));
  return c.report();
}

// ---------------------------------------------------------------- cavern

// Boundary displacement at u = 0.5 of every patch after the first verified
// converged run (tolerance 5e-5).
struct PinnedPoint {
  const char* patch;
  double ux, uy;
};
const PinnedPoint kCavernPin[] = {
    {"crown_left", 2.5052897415e-03, -1.4104344829e-02},
    {"crown", 2.3382047943e-04, -2.4347347466e-02},
    {"crown_right", -4.2635493713e-03, -2.5662089430e-02},
    {"haunch_right", -3.9066547151e-03, -1.2158141611e-02},
    {"wall_right_top", -1.0800117576e-02, -4.0041071826e-03},
    {"wall_right_mid", -2.3268891938e-02, -5.0035531782e-03},
    {"wall_right_low", -9.1789587006e-03, 2.7621437592e-03},
    {"floor", 4.1956412344e-04, 2.6373284375e-02},
    {"wall_left_low", 9.2417989008e-03, 4.1303661626e-03},
    {"wall_left_mid", 3.0539289197e-02, 2.6802098380e-03},
    {"wall_left_high", 2.0819441955e-02, -8.3716985055e-03},
    {"wall_left_top", 3.8805242396e-02, 3.0584887651e-03},
};

bool criterion_cavern(bool dump) {
  Criterion c(4, "cavern: converges, 4 joints active, displacements into the excavation, MC F <= 1e-3 (2c cos phi), < 5 min");
  const ModelFile m = fixture_model("cavern");
  IterativeSolver s(build_problem(m));
  const SolveResult r = s.run();
  c.check(r.converged, fmt("%s after %d iterations, increment %.3e", r.converged ? "converged" : "NOT converged",
                           r.iterations, r.history.back().increment_norm));

  int active_inclusions = 0;
  double worst = -1e300;
  std::string per;
  for (std::size_t i = 0; i < s.states().size(); ++i) {
    const InclusionState& st = s.states()[i];
    const YieldModel& y = m.inclusions[i].yield;
    const double scale = 2.0 * y.cohesion * std::cos(y.friction_deg * kPi / 180.0);
    const double nu = s.problem().inclusions[i].material().nu;
    int plastic = 0;
    for (std::size_t k = 0; k < st.grid.size(); ++k) {
      if (st.viscoplastic_strain[k].norm() > 0.0) ++plastic;
      worst = std::max(worst, mohr_coulomb_oracle(st.grid.stress[k], y.friction_deg, y.cohesion, nu) / scale);
    }
    active_inclusions += plastic > 0;
    per += fmt(" %s %d/%zu", s.problem().inclusions[i].name().c_str(), plastic, st.grid.size());
  }
  c.check(active_inclusions == 4, fmt("active inclusions %d of 4 (plastic nodes:%s)", active_inclusions, per.c_str()));
  c.check(worst <= 1e-3, fmt("max F / (2c cos phi) at grid nodes %.3e", worst));

  // the boundary normal points into the excavation
  const BoundaryModel& bm = s.problem().boundary;
  int inward = 0, samples = 0;
  bool finite = true;
  for (std::size_t p = 0; p < bm.patches().size(); ++p)
    for (double u : {0.1, 0.25, 0.5, 0.75, 0.9}) {
      const auto smp = bm.sample(s.solution(), static_cast<int>(p), u);
      finite = finite && smp.displacement.allFinite();
      inward += smp.displacement.dot(smp.normal) > 0.0;
      ++samples;
    }
  c.check(finite && inward == samples, fmt("displacement into the excavation at %d of %d samples", inward, samples));

  if (dump) {
    for (std::size_t p = 0; p < bm.patches().size(); ++p) {
      const auto smp = bm.sample(s.solution(), static_cast<int>(p), 0.5);
      std::printf("    {\"%s\", %.10e, %.10e},\n", bm.patches()[p].name.c_str(), smp.displacement.x(),
                  smp.displacement.y());
    }
  }
  double umax = 0.0, dev = 0.0;
  std::size_t matched = 0;
  for (std::size_t p = 0; p < bm.patches().size(); ++p) {
    const auto smp = bm.sample(s.solution(), static_cast<int>(p), 0.5);
    umax = std::max(umax, smp.displacement.norm());
    for (const PinnedPoint& q : kCavernPin)
      if (bm.patches()[p].name == q.patch) {
        dev = std::max(dev, (smp.displacement - Vec2(q.ux, q.uy)).norm());
        ++matched;
      }
  }
  c.check(matched == bm.patches().size() && dev <= 1e-6 * umax,
          fmt("pinned displacements: %zu of %zu patches, max deviation %.3e (bound %.3e)", matched,
              bm.patches().size(), dev, 1e-6 * umax));
  c.check(c.seconds() < 300.0, fmt("runtime %.1f s", c.seconds()));
  return c.report();
}

// ---------------------------------------------------------------- properties

double rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

NurbsCurve segment(Vec2 a, Vec2 b) { return NurbsCurve(1, {0, 0, 1, 1}, {a, b}); }

// Strain of a 2x2 field (column j = force direction) by central differences.
template <class F>
Mat32 fd_strain(F f, const Vec2& y, double h) {
  Mat2 d[2];
  for (int l = 0; l < 2; ++l) {
    Vec2 e = Vec2::Zero();
    e(l) = h;
    d[l] = (f(y + e) - f(y - e)) / (2 * h);
  }
  Mat32 s;
  for (int j = 0; j < 2; ++j) s.col(j) << d[0](0, j), d[1](1, j), d[1](0, j) + d[0](1, j);
  return s;
}

// int over the unit square of S(y, x) by polar integration around y, with
// panel breaks at the corner angles.
Mat32 polar_square(const Kernels& k, const Vec2& y) {
  auto ray = [&](const Vec2& d) {
    double r = 1e300;
    for (int c = 0; c < 2; ++c) {
      if (d(c) > 0) r = std::min(r, (1.0 - y(c)) / d(c));
      if (d(c) < 0) r = std::min(r, -y(c) / d(c));
    }
    return r;
  };
  std::vector<double> br = {0.0, 2.0 * kPi};
  for (const Vec2& c : {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)}) {
    double a = std::atan2(c.y() - y.y(), c.x() - y.x());
    if (a < 0) a += 2.0 * kPi;
    br.push_back(a);
  }
  std::sort(br.begin(), br.end());
  const QuadratureRule& g = gauss_legendre(16);
  Mat32 sum = Mat32::Zero();
  for (std::size_t b = 0; b + 1 < br.size(); ++b) {
    const int panels = 100;
    const double h = (br[b + 1] - br[b]) / panels;
    for (int p = 0; p < panels; ++p)
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double th = br[b] + h * (p + 0.5 * (1.0 + g.points[i]));
        const Vec2 d(std::cos(th), std::sin(th));
        // S ~ 1/r, so the radial integral of S r dr is S(y, y + d) R
        sum += k.S(y, y + d) * ray(d) * (0.5 * h * g.weights[i]);
      }
  }
  return sum;
}

bool criterion_properties() {
  Criterion c(5, "property suite, each check < 5 s");
  auto timed = [&](const char* name, auto body) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto [ok, detail] = body();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.check(ok && secs < 5.0, fmt("%s: %s (%.2f s)", name, detail.c_str(), secs));
  };

  timed("rigid-body row sums", [] {
    double worst = 0.0;
    for (const char* f : {"test1", "test2"}) {
      const Problem p = build_problem(fixture_model(f));
      const BoundarySystem sys(p.boundary);
      const auto n = static_cast<Eigen::Index>(p.boundary.point_count());
      for (int d = 0; d < 2; ++d) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(2 * n);
        for (Eigen::Index k = 0; k < n; ++k) v(2 * k + d) = 1.0;
        worst = std::max(worst, (sys.H() * v).lpNorm<Eigen::Infinity>());
      }
    }
    return std::pair{worst <= 1e-8, fmt("max |H 1| = %.3e (bound 1e-8)", worst)};
  });

  timed("patch test C_i = C", [] {
    ModelFile m = fixture_model("test1");
    m.inclusions[0].E = m.E;
    m.inclusions[0].nu = m.nu;
    IterativeSolver s(build_problem(m));
    const SolveResult r = s.run();
    const double f0 = s.f0().size() ? s.f0().cwiseAbs().maxCoeff() : 0.0;
    return std::pair{r.converged && r.iterations == 1 && f0 <= 1e-12,
                     fmt("%d iteration(s), |F0| = %.3e (bound 1e-12)", r.iterations, f0)};
  });

  timed("volume-to-surface identity", [] {
    const Kernels k(IsotropicMaterial{200.0, 0.3, PlaneMode::plane_strain});
    const Inclusion sq("sq", segment({0, 0}, {1, 0}), segment({0, 1}, {1, 1}), {}, {}, 6, 6);
    double worst = 0.0;
    for (const Vec2& y : {Vec2(0.3, 0.6), Vec2(0.05, 0.93), Vec2(0.7, 0.2)})
      worst = std::max(worst, rel(strain_kernel_surface_identity(y, sq, k), polar_square(k, y)));
    return std::pair{worst <= 1e-4, fmt("relative difference to polar brute force %.3e (bound 1e-4)", worst)};
  });

  timed("S = FD(U), R = FD(T)", [] {
    double ws = 0.0, wr = 0.0;
    for (PlaneMode mode : {PlaneMode::plane_strain, PlaneMode::plane_stress}) {
      const Kernels k(IsotropicMaterial{100.0, 0.2, mode});
      for (const auto& [y, x] : {std::pair{Vec2(0, 0), Vec2(0.3, 0.7)}, std::pair{Vec2(0.2, -0.1), Vec2(0.8, 0.7)},
                                 std::pair{Vec2(1.0, 2.0), Vec2(-0.5, 1.1)}}) {
        const double h = 1e-6 * (x - y).norm();
        ws = std::max(ws, rel(k.S(y, x), fd_strain([&](const Vec2& p) { return k.U(p, x); }, y, h)));
        const Vec2 n = Vec2(-0.28, 0.96);
        wr = std::max(wr, rel(k.R(y, x, n), fd_strain([&](const Vec2& p) { return k.T(p, x, n); }, y, h)));
      }
    }
    return std::pair{ws <= 1e-5 && wr <= 1e-4, fmt("S %.3e (bound 1e-5), R %.3e (bound 1e-4)", ws, wr)};
  });

  timed("closed inclusion normal integral", [] {
    double worst = 0.0;
    int loops = 0;
    const QuadratureRule& rule = gauss_legendre(16);
    for (const char* f : {"test1", "test3", "cavern"})
      for (const Inclusion& inc : build_problem(fixture_model(f)).inclusions) {
        Vec2 sum = Vec2::Zero();
        for (InclusionSegment seg : kInclusionSegments) {
          if (inc.segment_degenerate(seg)) continue;
          for (std::size_t i = 0; i < rule.size(); ++i) {
            const BoundaryTrace tr = inc.boundary_trace(seg, rule.points[i]);
            sum += tr.normal * (rule.weights[i] * tr.jacobian);
          }
        }
        worst = std::max(worst, sum.norm());
        ++loops;
      }
    return std::pair{worst <= 1e-10, fmt("%d loops, max |sum n dS| = %.3e (bound 1e-10)", loops, worst)};
  });

  timed("Gauss-Legendre exactness", [] {
    double worst = 0.0;
    for (int n = 1; n <= kMaxGaussOrder; ++n) {
      const QuadratureRule& rule = gauss_legendre(n);
      for (int p = 0; p <= 2 * n - 1; ++p) {
        long double sum = 0.0;
        for (std::size_t i = 0; i < rule.size(); ++i) sum += rule.weights[i] * std::pow(rule.points[i], p);
        const double exact = p % 2 ? 0.0 : 2.0 / (p + 1);
        worst = std::max(worst, static_cast<double>(std::abs(sum - exact)));
      }
    }
    return std::pair{worst <= 1e-13, fmt("orders 1..%d, max error %.3e (bound 1e-13)", kMaxGaussOrder, worst)};
  });

  timed("(t0, b0) equilibrium", [] {
    // flat bottom, parabolic top; smooth non-equilibrated stress field
    auto f = [](const Vec2& x) {
      return Voigt(std::sin(2.0 * x.x()) * std::cos(x.y()), x.x() * x.x() * x.y(),
                   std::exp(0.5 * x.x()) - x.y() * x.y() * x.y());
    };
    std::string detail;
    double previous = 1e300, last = 0.0;
    bool decreasing = true;
    for (auto [ns, nt] : {std::pair{20, 5}, {30, 8}, {40, 10}}) {
      const Inclusion arch("arch", segment({0, 0}, {2, 0}),
                           NurbsCurve(2, {0, 0, 0, 1, 1, 1}, {{0, 1}, {1, 1.6}, {2, 1}}), {}, {}, ns, nt);
      const FieldGrid g(arch);
      std::vector<Voigt> s(g.size());
      for (std::size_t k = 0; k < g.size(); ++k) s[k] = f(g.node(k).x);
      last = load_resultant(arch, g, s, g.body_forces(s)).norm() / surface_load_magnitude(arch, g, s);
      decreasing = decreasing && last < previous;
      previous = last;
      detail += fmt("%s%dx%d %.3e", detail.empty() ? "" : ", ", ns, nt, last);
    }
    return std::pair{decreasing && last <= 0.02, detail + " (bound 2% at 40x10, decreasing)"};
  });
  return c.report();
}

}  // namespace

int main(int argc, char** argv) {
  bool dump = false;
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--dump-cavern-pin") == 0)
      dump = true;
    else
      only.push_back(std::atoi(argv[i]));
  }
  auto wanted = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };
  bool ok = true;
  try {
    if (wanted(1)) ok &= criterion_test1();
    if (wanted(2)) ok &= criterion_test2();
    if (wanted(3)) ok &= criterion_test3();
    if (wanted(4)) ok &= criterion_cavern(dump);
    if (wanted(5)) ok &= criterion_properties();
  } catch (const std::exception& e) {
    std::printf("FAIL  error: %s\n", e.what());
    return 1;
  }
  return ok ? 0 : 1;
}
