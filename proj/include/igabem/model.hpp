#pragma once

// Line-oriented model files.
//
//   mode: plane_strain            # or plane_stress
//   domain: infinite              # or finite
//   E: 100
//   nu: 0
//   virgin_stress: 0 0 0
//
//   patch right
//     knots: 0 0 0 0.5 0.5 1 1 1
//     coefs: 0.5 1 0 1; 1 1 0 0.707; 1 0.5 0 1; 1 0 0 0.707; 0.5 0 0 1
//     field_knots: ...            # optional, default is the geometry basis
//     bc_x: traction 0 0          # type, then one value per field coefficient
//     bc_y: displacement          # no values means zero
//     stress_load: 0 1 0          # adds sigma . n to the traction
//   end
//   elevate: right 3              # displacement basis raised to degree 3
//
//   inclusion band
//     curve_I_knots: 0 0 1 1
//     curve_I_coefs: 0 0.33 0 1; 1 0.33 0 1
//     curve_II_knots: 0 0 1 1
//     curve_II_coefs: 0 0.66 0 1; 1 0.66 0 1
//     E: 0.5
//     nu: 0
//     yield: cap                  # none, cap or mohr_coulomb
//     grid: 20 5
//   end
//
//   iteration / outputs blocks with key: value lines.
//
// Coefficient rows are x y z w; z is ignored. Knot vectors are normalized
// to [0,1] on input.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "igabem/boundary.hpp"
#include "igabem/errors.hpp"
#include "igabem/inclusion.hpp"
#include "igabem/material.hpp"
#include "igabem/nurbs.hpp"
#include "igabem/solver.hpp"

namespace igabem {

struct CurveSpec {
  std::vector<double> knots;
  std::vector<std::array<double, 4>> coefs;  // x y z w

  bool operator==(const CurveSpec&) const = default;

  int degree() const { return degree_of(knots); }

  static int degree_of(const std::vector<double>& k) {
    int m = 1;
    while (m < static_cast<int>(k.size()) && k[m] == k[0]) ++m;
    return m - 1;
  }

  NurbsCurve curve() const {
    std::vector<Vec2> p;
    std::vector<double> w;
    for (const auto& c : coefs) {
      p.emplace_back(c[0], c[1]);
      w.push_back(c[3]);
    }
    return NurbsCurve(degree(), knots, std::move(p), std::move(w));
  }
};

struct BcSpec {
  BcType type = BcType::traction;
  std::vector<double> values;
  bool operator==(const BcSpec&) const = default;
};

struct PatchSpec {
  std::string name;
  int line = 0;
  CurveSpec geometry;
  std::vector<double> field_knots;
  std::array<BcSpec, 2> bc;
  std::optional<std::array<double, 3>> stress_load;
};

struct Elevation {
  std::string patch;
  int degree = 1;
  int line = 0;
};

struct InclusionSpec {
  std::string name;
  int line = 0;
  CurveSpec curve_I;
  CurveSpec curve_II;
  double E = 1.0;
  double nu = 0.0;
  YieldModel yield;
  int grid_s = 20;
  int grid_t = 5;
};

struct LineSpec {
  std::array<double, 2> from{};
  std::array<double, 2> to{};
  int points = 2;
};

struct OutputSpec {
  std::optional<LineSpec> line;
  std::optional<std::array<double, 2>> probe;
  /// Deformed-shape magnification; zero picks one automatically.
  double magnification = 0.0;
};

struct ModelFile {
  PlaneMode mode = PlaneMode::plane_strain;
  DomainKind domain = DomainKind::finite;
  double E = 1.0;
  double nu = 0.0;
  std::array<double, 3> virgin_stress{};
  std::vector<PatchSpec> patches;
  std::vector<Elevation> elevations;
  std::vector<InclusionSpec> inclusions;
  IterationConfig iteration;
  OutputSpec outputs;

  IsotropicMaterial material() const { return {E, nu, mode}; }
};

/// Shortest decimal text that reads back to the same double.
inline std::string format_number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

namespace detail {

struct Token {
  std::string text;
  int column = 0;
};

class LineReader {
 public:
  LineReader(int line, std::vector<Token> tokens, int end_column)
      : line_(line), tokens_(std::move(tokens)), end_column_(end_column) {}

  int line() const { return line_; }
  bool done() const { return pos_ >= tokens_.size(); }

  [[noreturn]] void fail(const std::string& what, int column) const { throw ParseError(what, line_, column); }
  [[noreturn]] void fail_here(const std::string& what) const {
    fail(what, done() ? end_column_ : tokens_[pos_].column);
  }

  const Token& next(const char* what) {
    if (done()) fail_here(std::string("expected ") + what);
    return tokens_[pos_++];
  }

  bool peek_is(std::string_view s) const { return !done() && tokens_[pos_].text == s; }
  void skip() { ++pos_; }

  double number() {
    const Token& t = next("a number");
    double v = 0.0;
    const char* b = t.text.data();
    const char* e = b + t.text.size();
    const auto r = std::from_chars(b, e, v);
    if (r.ec != std::errc() || r.ptr != e || !std::isfinite(v)) fail("invalid number '" + t.text + "'", t.column);
    return v;
  }

  int integer() {
    const Token& t = next("an integer");
    int v = 0;
    const char* b = t.text.data();
    const char* e = b + t.text.size();
    const auto r = std::from_chars(b, e, v);
    if (r.ec != std::errc() || r.ptr != e) fail("invalid integer '" + t.text + "'", t.column);
    return v;
  }

  std::vector<double> numbers() {
    std::vector<double> v;
    while (!done()) v.push_back(number());
    return v;
  }

  void finish() const {
    if (!done()) fail("unexpected '" + tokens_[pos_].text + "'", tokens_[pos_].column);
  }

  /// Column of the token at position k (for diagnostics after reading).
  int column_of(std::size_t k) const { return k < tokens_.size() ? tokens_[k].column : end_column_; }
  std::size_t position() const { return pos_; }

 private:
  int line_;
  std::vector<Token> tokens_;
  int end_column_;
  std::size_t pos_ = 0;
};

// Splits on whitespace; ';' and ':' after the key are separate tokens.
inline std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == ',') {
      ++i;
      continue;
    }
    if (c == ';') {
      out.push_back({";", static_cast<int>(i) + 1});
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < text.size() && text[i] != ' ' && text[i] != '\t' && text[i] != '\r' && text[i] != ';' &&
           text[i] != ',')
      ++i;
    out.push_back({std::string(text.substr(start, i - start)), static_cast<int>(start) + 1});
  }
  return out;
}

inline std::vector<double> read_knots(LineReader& r) {
  const std::size_t first = r.position();
  std::vector<double> k = r.numbers();
  if (k.size() < 2) r.fail("knot vector needs at least two values", r.column_of(first));
  for (std::size_t i = 1; i < k.size(); ++i)
    if (k[i] < k[i - 1]) r.fail("knot vector is not monotone (values must be non-decreasing)", r.column_of(first + i));
  const double lo = k.front(), hi = k.back();
  if (!(hi > lo)) r.fail("knot vector has zero length", r.column_of(first));
  const int p = CurveSpec::degree_of(k);
  for (int i = 0; i <= p; ++i)
    if (k[k.size() - 1 - i] != hi || static_cast<int>(k.size()) < 2 * (p + 1))
      r.fail("knot vector is not clamped (end knots need multiplicity degree+1)", r.column_of(first));
  if (p + 1 >= kMaxOrder) r.fail("knot vector degree is too high", r.column_of(first));
  if (lo != 0.0 || hi != 1.0)
    for (double& v : k) v = (v - lo) / (hi - lo);
  return k;
}

inline void read_coefs(LineReader& r, std::vector<std::array<double, 4>>& out) {
  while (!r.done()) {
    if (r.peek_is(";")) {
      r.skip();
      continue;
    }
    std::array<double, 4> row{};
    const std::size_t first = r.position();
    int n = 0;
    while (!r.done() && !r.peek_is(";")) {
      if (n == 4) r.fail("coefficient row needs 4 values (x y z w)", r.column_of(r.position()));
      row[n++] = r.number();
    }
    if (n != 4) r.fail("coefficient row needs 4 values (x y z w)", r.column_of(first));
    if (!(row[3] > 0.0)) r.fail("weights must be positive", r.column_of(first + 3));
    out.push_back(row);
  }
}

template <std::size_t N>
std::array<double, N> read_fixed(LineReader& r) {
  std::array<double, N> a{};
  for (double& v : a) v = r.number();
  r.finish();
  return a;
}

inline BcSpec read_bc(LineReader& r) {
  BcSpec bc;
  const Token& t = r.next("traction or displacement");
  if (t.text == "traction") bc.type = BcType::traction;
  else if (t.text == "displacement") bc.type = BcType::displacement;
  else r.fail("unknown boundary condition '" + t.text + "'", t.column);
  bc.values = r.numbers();
  return bc;
}

inline void check_curve(const CurveSpec& c, const char* what, int line) {
  if (c.knots.empty()) throw ParseError(std::string(what) + ": missing knots", line, 1);
  if (c.coefs.empty()) throw ParseError(std::string(what) + ": missing coefficients", line, 1);
  const std::size_t n = c.knots.size() - static_cast<std::size_t>(c.degree()) - 1;
  if (n != c.coefs.size())
    throw ParseError(std::string(what) + ": " + std::to_string(c.knots.size()) + " knots of degree " +
                         std::to_string(c.degree()) + " need " + std::to_string(n) + " coefficients, got " +
                         std::to_string(c.coefs.size()),
                     line, 1);
}

template <class Enum, std::size_t N>
Enum read_enum(LineReader& r, const std::array<std::pair<const char*, Enum>, N>& options) {
  const Token& t = r.next("a keyword");
  for (const auto& [name, value] : options)
    if (t.text == name) {
      r.finish();
      return value;
    }
  std::string list;
  for (const auto& o : options) list += std::string(list.empty() ? "" : ", ") + o.first;
  r.fail("'" + t.text + "' is not one of " + list, t.column);
}

inline constexpr std::array<std::pair<const char*, PlaneMode>, 2> kModes = {
    {{"plane_strain", PlaneMode::plane_strain}, {"plane_stress", PlaneMode::plane_stress}}};
inline constexpr std::array<std::pair<const char*, DomainKind>, 2> kDomains = {
    {{"finite", DomainKind::finite}, {"infinite", DomainKind::infinite}}};
inline constexpr std::array<std::pair<const char*, YieldKind>, 3> kYields = {
    {{"none", YieldKind::none}, {"cap", YieldKind::normal_cap}, {"mohr_coulomb", YieldKind::mohr_coulomb}}};
inline constexpr std::array<std::pair<const char*, CapMode>, 2> kCapModes = {
    {{"tension", CapMode::tension}, {"both", CapMode::both}}};
inline constexpr std::array<std::pair<const char*, int>, 2> kComponents = {{{"x", 0}, {"y", 1}}};
inline constexpr std::array<std::pair<const char*, ConvergenceMetric>, 3> kMetrics = {
    {{"initial_stress_norm", ConvergenceMetric::initial_stress_norm},
     {"displacement_ratio", ConvergenceMetric::displacement_ratio},
     {"moment_ratio", ConvergenceMetric::moment_ratio}}};

template <class Enum, std::size_t N>
const char* enum_name(Enum v, const std::array<std::pair<const char*, Enum>, N>& options) {
  for (const auto& [name, value] : options)
    if (value == v) return name;
  return "";
}

}  // namespace detail

/// Parses model text. Errors carry the 1-based line and column.
inline ModelFile parse_model(std::string_view text) {
  using detail::LineReader;
  ModelFile m;
  enum class Block { none, patch, inclusion, iteration, outputs } block = Block::none;
  int block_line = 0;
  std::vector<std::string> seen;  // keys seen in the current block
  int line_no = 0;
  std::size_t pos = 0;

  auto check_duplicate = [&](LineReader& r, const std::string& key) {
    static constexpr std::array<std::string_view, 4> repeatable = {"coefs", "curve_I_coefs", "curve_II_coefs",
                                                                   "elevate"};
    if (std::find(repeatable.begin(), repeatable.end(), key) != repeatable.end()) return;
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) r.fail("duplicate key '" + key + "'", 1);
    seen.push_back(key);
  };

  auto close_block = [&](int line) {
    if (block == Block::patch) {
      const PatchSpec& p = m.patches.back();
      detail::check_curve(p.geometry, ("patch '" + p.name + "'").c_str(), p.line);
    } else if (block == Block::inclusion) {
      const InclusionSpec& c = m.inclusions.back();
      detail::check_curve(c.curve_I, ("inclusion '" + c.name + "' curve I").c_str(), c.line);
      detail::check_curve(c.curve_II, ("inclusion '" + c.name + "' curve II").c_str(), c.line);
      try {
        c.yield.validate();
      } catch (const ModelError& e) {
        throw ParseError("inclusion '" + c.name + "': " + e.what(), c.line, 1);
      }
    }
    (void)line;
    block = Block::none;
    seen.clear();
  };

  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::size_t hash = raw.find('#');
    if (hash != std::string_view::npos) raw = raw.substr(0, hash);
    // key: rest
    const std::size_t colon = raw.find(':');
    std::vector<detail::Token> head = detail::tokenize(colon == std::string_view::npos ? raw : raw.substr(0, colon));
    if (head.empty() && colon == std::string_view::npos) continue;
    if (head.empty()) throw ParseError("missing key before ':'", line_no, static_cast<int>(colon) + 1);
    const int end_col = static_cast<int>(raw.size()) + 1;

    if (colon == std::string_view::npos) {
      // block delimiters
      LineReader r(line_no, head, end_col);
      const detail::Token& w = r.next("a keyword");
      const std::string word = w.text;
      if (word == "end") {
        if (block == Block::none) r.fail("'end' without an open block", w.column);
        r.finish();
        close_block(line_no);
        continue;
      }
      if (block != Block::none)
        r.fail("block started at line " + std::to_string(block_line) + " is not closed", w.column);
      seen.clear();
      block_line = line_no;
      if (word == "patch" || word == "inclusion") {
        const detail::Token& n = r.next("a name");
        r.finish();
        if (word == "patch") {
          for (const PatchSpec& p : m.patches)
            if (p.name == n.text) r.fail("duplicate patch name '" + n.text + "'", n.column);
          m.patches.push_back({});
          m.patches.back().name = n.text;
          m.patches.back().line = line_no;
          block = Block::patch;
        } else {
          for (const InclusionSpec& c : m.inclusions)
            if (c.name == n.text) r.fail("duplicate inclusion name '" + n.text + "'", n.column);
          m.inclusions.push_back({});
          m.inclusions.back().name = n.text;
          m.inclusions.back().line = line_no;
          m.inclusions.back().E = m.E;
          m.inclusions.back().nu = m.nu;
          block = Block::inclusion;
        }
      } else if (word == "iteration" || word == "outputs") {
        r.finish();
        block = word == "iteration" ? Block::iteration : Block::outputs;
      } else {
        r.fail("unknown statement '" + word + "'", w.column);
      }
      continue;
    }

    if (head.size() != 1) throw ParseError("unexpected '" + head[1].text + "'", line_no, head[1].column);
    const std::string key = head[0].text;
    std::vector<detail::Token> rest = detail::tokenize(raw.substr(colon + 1));
    for (detail::Token& t : rest) t.column += static_cast<int>(colon) + 1;
    LineReader r(line_no, std::move(rest), end_col);
    const int key_col = head[0].column;
    auto unknown = [&]() { r.fail("unknown key '" + key + "'", key_col); };
    check_duplicate(r, key);

    switch (block) {
      case Block::none:
        if (key == "mode") m.mode = detail::read_enum(r, detail::kModes);
        else if (key == "domain") m.domain = detail::read_enum(r, detail::kDomains);
        else if (key == "E") {
          m.E = r.number();
          r.finish();
        } else if (key == "nu") {
          m.nu = r.number();
          r.finish();
        } else if (key == "virgin_stress") m.virgin_stress = detail::read_fixed<3>(r);
        else if (key == "elevate") {
          Elevation e;
          const detail::Token& p = r.next("a patch name");
          e.patch = p.text;
          e.line = line_no;
          e.degree = r.integer();
          r.finish();
          const auto it = std::find_if(m.patches.begin(), m.patches.end(),
                                       [&](const PatchSpec& s) { return s.name == e.patch; });
          if (it == m.patches.end()) r.fail("unknown patch '" + e.patch + "'", p.column);
          if (e.degree < 1 || e.degree >= kMaxOrder) r.fail("elevation degree out of range", r.column_of(1));
          m.elevations.push_back(e);
        } else unknown();
        break;
      case Block::patch: {
        PatchSpec& p = m.patches.back();
        if (key == "knots") p.geometry.knots = detail::read_knots(r);
        else if (key == "coefs") detail::read_coefs(r, p.geometry.coefs);
        else if (key == "field_knots") p.field_knots = detail::read_knots(r);
        else if (key == "bc_x") p.bc[0] = detail::read_bc(r);
        else if (key == "bc_y") p.bc[1] = detail::read_bc(r);
        else if (key == "stress_load") p.stress_load = detail::read_fixed<3>(r);
        else unknown();
        break;
      }
      case Block::inclusion: {
        InclusionSpec& c = m.inclusions.back();
        YieldModel& y = c.yield;
        auto scalar = [&](double& v) {
          v = r.number();
          r.finish();
        };
        if (key == "curve_I_knots") c.curve_I.knots = detail::read_knots(r);
        else if (key == "curve_I_coefs") detail::read_coefs(r, c.curve_I.coefs);
        else if (key == "curve_II_knots") c.curve_II.knots = detail::read_knots(r);
        else if (key == "curve_II_coefs") detail::read_coefs(r, c.curve_II.coefs);
        else if (key == "E") scalar(c.E);
        else if (key == "nu") scalar(c.nu);
        else if (key == "yield") y.kind = detail::read_enum(r, detail::kYields);
        else if (key == "cap_component") y.cap_component = detail::read_enum(r, detail::kComponents);
        else if (key == "cap_mode") y.cap_mode = detail::read_enum(r, detail::kCapModes);
        else if (key == "cap_limit") scalar(y.limit);
        else if (key == "cap_auto") scalar(y.auto_fraction);
        else if (key == "friction") scalar(y.friction_deg);
        else if (key == "cohesion") scalar(y.cohesion);
        else if (key == "dilation") scalar(y.dilation_deg);
        else if (key == "viscosity") scalar(y.viscosity);
        else if (key == "time_step") scalar(y.time_step);
        else if (key == "grid") {
          c.grid_s = r.integer();
          c.grid_t = r.integer();
          r.finish();
          if (c.grid_s < 3 || c.grid_t < 3) r.fail("grid needs at least 3x3 nodes", r.column_of(0));
        } else unknown();
        break;
      }
      case Block::iteration: {
        IterationConfig& it = m.iteration;
        if (key == "max_iterations") {
          it.max_iterations = r.integer();
          r.finish();
        } else if (key == "tolerance") {
          it.tolerance = r.number();
          r.finish();
        } else if (key == "metric") it.metric = detail::read_enum(r, detail::kMetrics);
        else if (key == "reference") {
          it.reference = r.number();
          r.finish();
        } else if (key == "section") {
          it.section_inclusion = r.integer();
          it.section_row = r.integer();
          r.finish();
        } else unknown();
        break;
      }
      case Block::outputs: {
        OutputSpec& o = m.outputs;
        if (key == "line") {
          LineSpec l;
          l.from = {r.number(), r.number()};
          l.to = {r.number(), r.number()};
          l.points = r.integer();
          r.finish();
          if (l.points < 2) r.fail("a line needs at least 2 points", r.column_of(4));
          o.line = l;
        } else if (key == "probe") o.probe = detail::read_fixed<2>(r);
        else if (key == "magnification") {
          o.magnification = r.number();
          r.finish();
        } else unknown();
        break;
      }
    }
  }
  if (block != Block::none) throw ParseError("block is not closed with 'end'", block_line, 1);
  if (m.patches.empty()) throw ParseError("model has no boundary patches", line_no, 1);

  // consecutive patches must join up into one closed loop
  const double scale = [&] {
    double s = 0.0;
    for (const PatchSpec& p : m.patches)
      for (const auto& c : p.geometry.coefs) s = std::max({s, std::abs(c[0]), std::abs(c[1])});
    return std::max(s, 1e-300);
  }();
  for (std::size_t i = 0; i < m.patches.size(); ++i) {
    const PatchSpec& a = m.patches[i];
    const PatchSpec& b = m.patches[(i + 1) % m.patches.size()];
    const auto& e = a.geometry.coefs.back();
    const auto& s = b.geometry.coefs.front();
    if (std::hypot(e[0] - s[0], e[1] - s[1]) > 1e-9 * scale)
      throw ParseError("boundary is open: patch '" + a.name + "' ends at (" + format_number(e[0]) + ", " +
                           format_number(e[1]) + ") but patch '" + b.name + "' starts at (" + format_number(s[0]) +
                           ", " + format_number(s[1]) + ")",
                       b.line, 1);
  }
  for (const PatchSpec& p : m.patches)
    for (int d = 0; d < 2; ++d) {
      const std::vector<double>& fk = p.field_knots.empty() ? p.geometry.knots : p.field_knots;
      std::size_t n = fk.size() - static_cast<std::size_t>(CurveSpec::degree_of(fk)) - 1;
      // elevation adds coefficients; values must match the final basis
      for (const Elevation& e : m.elevations)
        if (e.patch == p.name) n = 0;
      if (n != 0 && !p.bc[d].values.empty() && p.bc[d].values.size() != n)
        throw ParseError("patch '" + p.name + "': bc_" + (d == 0 ? "x" : "y") + " has " +
                             std::to_string(p.bc[d].values.size()) + " values for " + std::to_string(n) +
                             " field coefficients",
                         p.line, 1);
    }
  return m;
}

/// Canonical text; parse_model(serialize_model(m)) reproduces m exactly.
inline std::string serialize_model(const ModelFile& m) {
  using detail::enum_name;
  std::ostringstream o;
  auto nums = [&](const auto& v) {
    for (double x : v) o << ' ' << format_number(x);
  };
  auto coefs = [&](const std::vector<std::array<double, 4>>& c) {
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (i) o << ';';
      nums(c[i]);
    }
  };
  o << "mode: " << enum_name(m.mode, detail::kModes) << '\n';
  o << "domain: " << enum_name(m.domain, detail::kDomains) << '\n';
  o << "E: " << format_number(m.E) << '\n';
  o << "nu: " << format_number(m.nu) << '\n';
  o << "virgin_stress:";
  nums(m.virgin_stress);
  o << '\n';
  for (const PatchSpec& p : m.patches) {
    o << "\npatch " << p.name << "\n  knots:";
    nums(p.geometry.knots);
    o << "\n  coefs:";
    coefs(p.geometry.coefs);
    o << '\n';
    if (!p.field_knots.empty()) {
      o << "  field_knots:";
      nums(p.field_knots);
      o << '\n';
    }
    for (int d = 0; d < 2; ++d) {
      o << "  bc_" << (d == 0 ? 'x' : 'y') << ": "
        << (p.bc[d].type == BcType::traction ? "traction" : "displacement");
      nums(p.bc[d].values);
      o << '\n';
    }
    if (p.stress_load) {
      o << "  stress_load:";
      nums(*p.stress_load);
      o << '\n';
    }
    o << "end\n";
  }
  if (!m.elevations.empty()) o << '\n';
  for (const Elevation& e : m.elevations) o << "elevate: " << e.patch << ' ' << e.degree << '\n';
  for (const InclusionSpec& c : m.inclusions) {
    const YieldModel& y = c.yield;
    o << "\ninclusion " << c.name << "\n  curve_I_knots:";
    nums(c.curve_I.knots);
    o << "\n  curve_I_coefs:";
    coefs(c.curve_I.coefs);
    o << "\n  curve_II_knots:";
    nums(c.curve_II.knots);
    o << "\n  curve_II_coefs:";
    coefs(c.curve_II.coefs);
    o << "\n  E: " << format_number(c.E) << "\n  nu: " << format_number(c.nu) << '\n';
    o << "  yield: " << enum_name(y.kind, detail::kYields) << '\n';
    if (y.kind == YieldKind::normal_cap) {
      o << "  cap_component: " << enum_name(y.cap_component, detail::kComponents) << '\n';
      o << "  cap_mode: " << enum_name(y.cap_mode, detail::kCapModes) << '\n';
      o << "  cap_limit: " << format_number(y.limit) << '\n';
      o << "  cap_auto: " << format_number(y.auto_fraction) << '\n';
    } else if (y.kind == YieldKind::mohr_coulomb) {
      o << "  friction: " << format_number(y.friction_deg) << '\n';
      o << "  cohesion: " << format_number(y.cohesion) << '\n';
      o << "  dilation: " << format_number(y.dilation_deg) << '\n';
    }
    if (y.kind != YieldKind::none) {
      o << "  viscosity: " << format_number(y.viscosity) << '\n';
      o << "  time_step: " << format_number(y.time_step) << '\n';
    }
    o << "  grid: " << c.grid_s << ' ' << c.grid_t << "\nend\n";
  }
  const IterationConfig& it = m.iteration;
  o << "\niteration\n  max_iterations: " << it.max_iterations << "\n  tolerance: " << format_number(it.tolerance)
    << "\n  metric: " << enum_name(it.metric, detail::kMetrics) << "\n  reference: " << format_number(it.reference)
    << "\n  section: " << it.section_inclusion << ' ' << it.section_row << "\nend\n";
  const OutputSpec& out = m.outputs;
  o << "\noutputs\n";
  if (out.line) {
    o << "  line:";
    nums(out.line->from);
    nums(out.line->to);
    o << ' ' << out.line->points << '\n';
  }
  if (out.probe) {
    o << "  probe:";
    nums(*out.probe);
    o << '\n';
  }
  o << "  magnification: " << format_number(out.magnification) << "\nend\n";
  return o.str();
}

inline ModelFile load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return parse_model(s.str());
}

/// Displacement basis of a patch after elevation directives.
inline NurbsBasis field_basis(const ModelFile& m, const PatchSpec& p) {
  NurbsBasis b = p.field_knots.empty() ? p.geometry.curve().basis()
                                       : NurbsBasis(CurveSpec::degree_of(p.field_knots), p.field_knots);
  for (const Elevation& e : m.elevations) {
    if (e.patch != p.name) continue;
    if (e.degree < b.degree())
      throw ParseError("patch '" + p.name + "' has degree " + std::to_string(b.degree()) + ", cannot elevate to " +
                           std::to_string(e.degree),
                       e.line, 1);
    while (b.degree() < e.degree) b = b.elevated();
  }
  return b;
}

inline Voigt to_voigt(const std::array<double, 3>& a) { return Voigt(a[0], a[1], a[2]); }

/// Builds the boundary model, inclusions and iteration settings.
inline Problem build_problem(const ModelFile& m, const QuadraturePolicy& policy = {}) {
  std::vector<Patch> patches;
  for (const PatchSpec& s : m.patches) {
    Patch p;
    p.name = s.name;
    try {
      p.geometry = s.geometry.curve();
      p.field = field_basis(m, s);
    } catch (const ModelError& e) {
      throw ParseError("patch '" + s.name + "': " + e.what(), s.line, 1);
    }
    for (int d = 0; d < 2; ++d) {
      p.bc[d].type = s.bc[d].type;
      p.bc[d].values = s.bc[d].values;
      if (!s.bc[d].values.empty() && s.bc[d].values.size() != p.field.size())
        throw ParseError("patch '" + s.name + "': bc_" + (d == 0 ? "x" : "y") + " has " +
                             std::to_string(s.bc[d].values.size()) + " values for " +
                             std::to_string(p.field.size()) + " field coefficients",
                         s.line, 1);
    }
    if (s.stress_load) p.stress_load = to_voigt(*s.stress_load);
    patches.push_back(std::move(p));
  }
  Problem pb{BoundaryModel(std::move(patches), m.domain, m.material(), policy), {}, to_voigt(m.virgin_stress),
             m.iteration, {}, std::nullopt};
  for (const InclusionSpec& c : m.inclusions) {
    try {
      pb.inclusions.emplace_back(c.name, c.curve_I.curve(), c.curve_II.curve(), IsotropicMaterial{c.E, c.nu, m.mode},
                                 c.yield, c.grid_s, c.grid_t);
    } catch (const ModelError& e) {
      throw ParseError("inclusion '" + c.name + "': " + e.what(), c.line, 1);
    }
  }
  if (m.outputs.line) {
    const LineSpec& l = *m.outputs.line;
    const Vec2 a(l.from[0], l.from[1]), b(l.to[0], l.to[1]);
    for (int k = 0; k < l.points; ++k) pb.line_points.push_back(a + (b - a) * (double(k) / (l.points - 1)));
  }
  if (m.outputs.probe) pb.probe = Vec2((*m.outputs.probe)[0], (*m.outputs.probe)[1]);
  return pb;
}

}  // namespace igabem
