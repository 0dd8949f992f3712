#pragma once
// Plane-stress surrogate of a cantilever wing. The planform is meshed with
// bilinear quads; x runs along the chord, y along the span, and the root edge
// (y = 0) is clamped. Lift enters as an elliptic transverse line load along
// the mid-chord span line, so the plate bends in-plane like a deep cantilever.
//
// Conventions:
//   * damage region i scales the stiffness of every element whose centroid
//     falls inside its rectangle by (1 - mu_i / 100)
//   * gauges report spanwise normal strain in microstrain, sign-flipped so
//     the compression side (x beyond mid-chord, where the damage regions sit)
//     reads positive
//   * a gauge on an element boundary belongs to the element on its tip side
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "dtwin/layout.hpp"
#include "dtwin/types.hpp"

namespace dtwin {

struct Material {
  double youngs_modulus = 50.0e9;  // [Pa]
  double poisson_ratio = 0.3;
  double thickness = 0.003;  // [m]
};

struct PlateConfig {
  double span = 1.8;   // [m]
  double chord = 0.4;  // [m]
  int n_span = 48;     // elements along the span
  int n_chord = 12;    // elements along the chord (even: load column on nodes)
  Material material;
  std::vector<Rect> damage_regions;  // planform fractions
  bool clamp_root = true;
};

class PlateModel {
 public:
  explicit PlateModel(PlateConfig cfg);

  const PlateConfig& config() const { return cfg_; }
  int n_nodes() const { return (cfg_.n_span + 1) * (cfg_.n_chord + 1); }

  // Full nodal displacement field (ux, uy per node, row-major from the root).
  // Throws std::domain_error for damage outside [0, 100) and
  // std::runtime_error when the system cannot be solved to tolerance.
  std::vector<double> solve(const DamageScenario& s, const LoadCase& load) const;

  // Spanwise normal strain at each gauge position, microstrain,
  // compression-positive. Gauges must lie inside the planform.
  std::vector<double> gauge_strain(const DamageScenario& s, const LoadCase& load,
                                   std::span<const Gauge> gauges) const;

  // Work done by the applied load; grows as the structure softens.
  double strain_energy(const DamageScenario& s, const LoadCase& load) const;

  // Stiffness scale applied to element (span index, chord index).
  double element_factor(const DamageScenario& s, int is, int ic) const;

  // Bounding box (planform fractions) of the elements a region actually
  // weakens; empty regions return a degenerate rect.
  Rect damaged_footprint(int region_index) const;

 private:
  const std::vector<double>& unit_solution(const DamageScenario& s) const;
  void check_scenario(const DamageScenario& s) const;

  PlateConfig cfg_;
  double dx_ = 0, dy_ = 0;
  std::vector<double> ke_;         // 8x8 pristine element stiffness, row-major
  std::vector<double> unit_load_;  // nodal loads, unit resultant, +x direction
  std::vector<int> free_index_;    // dof -> free-system index or -1

  mutable std::mutex cache_mutex_;
  mutable std::map<std::pair<std::uint64_t, std::uint64_t>,
                   std::shared_ptr<const std::vector<double>>>
      unit_cache_;
};

// Reference weight making the peak usable-gauge strain magnitude equal to
// target_microstrain for the pristine plate at the given load factor. Strain
// is linear in the load resultant, so the scale is computed in one solve.
double calibrate_reference_weight(const PlateModel& model,
                                  const SensorLayout& layout,
                                  double load_factor,
                                  double target_microstrain);

}  // namespace dtwin
