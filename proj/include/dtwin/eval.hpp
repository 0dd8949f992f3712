#pragma once
// Tree evaluation on labeled datasets, plus the depth-by-complexity sweep.
#include <vector>

#include "dtwin/dataset.hpp"
#include "dtwin/train.hpp"
#include "dtwin/tree.hpp"

namespace dtwin {

struct EvalMetrics {
  int n = 0;
  int n_classes = 0;
  double mae = 0.0;         // weighted mean |true - predicted| damage percent
  double error_rate = 0.0;  // weighted misclassification fraction
  std::vector<int> confusion;  // n_classes x n_classes, row-major, row = truth
  io::json to_json() const;
};

// Evaluates against the tree's own target column. Rows whose true damage is
// not one of the tree's label values still contribute to MAE and count as
// misclassified, but are left out of the confusion matrix.
EvalMetrics evaluate(const Tree& t, const Dataset& d);

io::CsvTable confusion_csv(const EvalMetrics& m, const std::vector<double>& labels);

struct SweepCell {
  int depth = 0;
  int split_complexity = 0;  // 0 = unlimited
  double objective = 0.0;    // training objective of the selected tree
  EvalMetrics train, test;
  int features_used = 0;
  Tree tree;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  io::CsvTable to_csv() const;
  io::json to_json() const;
};

// One tree per (depth, complexity) cell. Each cell considers a freshly
// trained tree plus local-search continuations of the lower-complexity and
// lower-depth neighbors, keeping the best by (training objective, training
// MAE, fewer splits); training objectives are therefore monotone along both
// axes. Depths ascend; complexities are ordered by effective budget with 0
// (unlimited) last.
SweepResult sweep(const Dataset& train_set, const Dataset& test_set,
                  const TrainConfig& base, std::vector<int> depths,
                  std::vector<int> complexities);

}  // namespace dtwin
