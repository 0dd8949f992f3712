#pragma once
// Retrofit study: would extra gauge positions beat the factory set? Paired
// datasets are generated for the installed layout and the full candidate
// layout (shared gauges see identical noise), one tree is trained per depth
// on each, and the candidate run is additionally warm-started from the
// installed tree re-indexed into the candidate feature space.
#include <vector>

#include "dtwin/eval.hpp"
#include "dtwin/layout.hpp"
#include "dtwin/plate.hpp"
#include "dtwin/train.hpp"

namespace dtwin {

struct PlacementRow {
  int depth = 0;
  double fixed_objective = 0.0;
  double upgraded_objective = 0.0;
  EvalMetrics fixed_train, fixed_test;
  EvalMetrics upgraded_train, upgraded_test;
  std::vector<int> kept_installed;    // installed gauge ids the upgraded tree uses
  std::vector<int> added_candidates;  // retrofit gauge ids the upgraded tree uses
  Tree fixed_tree, upgraded_tree;
};

struct PlacementStudy {
  std::vector<PlacementRow> rows;
  std::string map_text;  // planform chart of the selections per depth
  io::CsvTable to_csv() const;
  io::json to_json() const;
};

// Re-index a tree's features from one gauge-id column set to another; every
// gauge id used by the tree must exist in the target columns.
Tree reindex_tree(const Tree& t, const std::vector<int>& from_ids,
                  const std::vector<int>& to_ids,
                  const std::vector<std::string>& to_names);

PlacementStudy placement_study(const PlateModel& model, const ModelLibrary& lib,
                               const SensorLayout& installed,
                               const SensorLayout& candidate, const LoadCase& load,
                               double noise_variance, int samples_per_scenario,
                               double test_fraction, const TrainConfig& base,
                               const std::vector<int>& depths);

}  // namespace dtwin
