#pragma once
// Flight simulator for the twin-in-the-loop demo. Both damage regions degrade
// linearly over the mission; each step the airframe flies at the load factor
// its current capability allows, gauges are read with noise, the trees
// estimate both damage parameters, and capability drops (once, permanently)
// when either estimate reaches the failure threshold. Obstacles are passed
// aggressively (direct) or conservatively (detour) per the capability at that
// step.
#include <cstdint>
#include <string>
#include <vector>

#include "dtwin/layout.hpp"
#include "dtwin/plate.hpp"
#include "dtwin/tree.hpp"

namespace dtwin {

struct MissionConfig {
  int n_steps = 100;
  double degrade_to = 80.0;        // percent damage reached at the final step
  double failure_threshold = 40.0; // estimate triggering the capability drop
  std::vector<int> obstacle_steps{20, 55, 85};
  double aggressive_load = 3.0;
  double conservative_load = 2.0;
  double noise_variance = 1000.0;  // [microstrain^2]; 0 flies noise-free
  std::uint64_t seed = 1;
};

// True damage (both regions) at a step: linear from 0 to degrade_to.
double mission_truth(const MissionConfig& cfg, int step);

struct MissionStep {
  int step = 0;
  double true_mu1 = 0.0, true_mu2 = 0.0;
  double load_factor = 0.0;           // flown this step
  std::vector<double> features;       // the measured vector the trees saw
  double mu1_hat = 0.0, mu2_hat = 0.0;
  int capability = 3;        // after this step's classification
  std::string obstacle_path; // "aggressive"/"conservative" at obstacle steps
};

struct MissionLog {
  std::vector<std::string> feature_names;  // one per usable gauge
  std::vector<MissionStep> steps;
  int switch_step = -1;  // first step flown with reduced capability decision
  io::json summary() const;
  io::CsvTable to_csv() const;
};

MissionLog run_mission(const PlateModel& model, const SensorLayout& layout,
                       const LoadCase& base, const Tree& tree_mu1,
                       const Tree& tree_mu2, const MissionConfig& cfg);

}  // namespace dtwin
