#pragma once
#include <stdexcept>
#include <vector>

namespace dtwin {

// Stiffness knockdown per damage region, in percent of the pristine value.
// 100% would make the region's elements singular, so solves reject it.
struct DamageScenario {
  double mu1 = 0.0;
  double mu2 = 0.0;
};

// Axis-aligned rectangle in planform fractions: span and chord both in [0,1].
struct Rect {
  double span_lo = 0.0, span_hi = 0.0;
  double chord_lo = 0.0, chord_hi = 0.0;

  bool contains(double span_frac, double chord_frac) const {
    return span_frac >= span_lo && span_frac <= span_hi &&
           chord_frac >= chord_lo && chord_frac <= chord_hi;
  }
};

// Load applied to the plate: load_factor (g) times the calibrated reference
// weight gives the total transverse line-load resultant.
struct LoadCase {
  double load_factor = 3.0;
  double reference_weight = 1.0;
  double total_lift() const { return load_factor * reference_weight; }
};

// Cross product of damage levels for the two regions, row-major in (mu1, mu2).
struct ModelLibrary {
  std::vector<double> levels;
  std::vector<DamageScenario> scenarios;

  int level_index(double mu) const {
    for (std::size_t i = 0; i < levels.size(); ++i)
      if (mu == levels[i]) return static_cast<int>(i);
    throw std::domain_error("damage level not on the library grid");
  }

  int scenario_index(double mu1, double mu2) const {
    return level_index(mu1) * static_cast<int>(levels.size()) + level_index(mu2);
  }
};

inline ModelLibrary build_library(const std::vector<double>& levels) {
  if (levels.empty()) throw std::domain_error("empty damage level grid");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] < 0.0 || levels[i] >= 100.0)
      throw std::domain_error("damage level outside [0, 100)");
    if (i > 0 && levels[i] <= levels[i - 1])
      throw std::domain_error("damage levels must be strictly increasing");
  }
  ModelLibrary lib;
  lib.levels = levels;
  lib.scenarios.reserve(levels.size() * levels.size());
  for (double a : levels)
    for (double b : levels) lib.scenarios.push_back({a, b});
  return lib;
}

inline std::vector<double> default_levels() { return {0.0, 20.0, 40.0, 60.0, 80.0}; }

}  // namespace dtwin
