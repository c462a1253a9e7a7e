#pragma once

// Bundled example models. The texts live in models/*.model and are compiled
// in; test3_fine is the hole example on the finer 40x10 grid.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "igabem/errors.hpp"
#include "igabem/fixture_data.hpp"
#include "igabem/model.hpp"

namespace igabem {

struct Fixture {
  std::string_view name;
  std::string_view description;
  std::string_view source;  // bundled model text it is built from
  std::optional<std::pair<int, int>> grid;
};

inline constexpr std::array<Fixture, 5> kFixtures = {{
    {"test1", "unit cube, soft elastic layer (E_i = E/2), moment load", "test1", std::nullopt},
    {"test2", "unit cube, layer with 80% normal-stress cap, moment load", "test2", std::nullopt},
    {"test3", "hole in an infinite plane, capped layer above it, 30x8 grid", "test3", std::nullopt},
    {"test3_fine", "hole example on a 40x10 grid", "test3", std::pair{40, 10}},
    {"cavern", "power station cavern with four Mohr-Coulomb joint zones", "cavern", std::nullopt},
}};

inline std::string_view bundled_model_text(std::string_view source) {
  for (const auto& e : fixture_data::entries)
    if (e.name == source) return e.text;
  throw Error("no bundled model '" + std::string(source) + "'");
}

inline const Fixture& find_fixture(std::string_view name) {
  for (const Fixture& f : kFixtures)
    if (f.name == name) return f;
  std::string list;
  for (const Fixture& f : kFixtures) list += std::string(list.empty() ? "" : ", ") + std::string(f.name);
  throw Error("unknown fixture '" + std::string(name) + "' (available: " + list + ")");
}

/// Sets the grid of every inclusion.
inline void set_grid(ModelFile& m, int n_s, int n_t) {
  if (n_s < 3 || n_t < 3) throw ModelError("grid needs at least 3x3 nodes");
  for (InclusionSpec& c : m.inclusions) {
    c.grid_s = n_s;
    c.grid_t = n_t;
  }
}

inline ModelFile fixture_model(std::string_view name) {
  const Fixture& f = find_fixture(name);
  ModelFile m = parse_model(bundled_model_text(f.source));
  if (f.grid) set_grid(m, f.grid->first, f.grid->second);
  return m;
}

}  // namespace igabem
