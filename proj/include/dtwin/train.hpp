#pragma once
// Tree learning: a deterministic greedy initializer (randomized feature
// subsets on restarts) followed by first-improvement local search over
// structured moves:
//   * collapse a branch to a leaf
//   * replace a branch's split with the best axis split (exhaustive sweep)
//   * coordinate-descent refinement of hyperplane splits, one coefficient or
//     the threshold at a time, with explicit add/remove of coefficients under
//     the sparsity budget
//   * grow a leaf with the best axis split
// A move is applied only when the exactly recomputed objective strictly
// decreases, so objective traces are strictly decreasing and the search stops
// at a tree no single move can improve. The objective is the weighted
// misclassification rate plus alpha per split.
#include <cstdint>
#include <string>
#include <vector>

#include "dtwin/dataset.hpp"
#include "dtwin/tree.hpp"

namespace dtwin {

struct TrainConfig {
  int max_depth = 3;
  int max_split_complexity = 1;  // nonzero coefficients per split; 0 = unlimited
  double alpha = 0.0;            // objective penalty per split
  int min_leaf = 1;              // minimum rows per leaf
  int restarts = 20;
  int max_passes = 64;  // local-search pass cap; normally stops at a fixpoint
  std::uint64_t seed = 1;
  bool prefer_higher_label = false;
  std::string target = "mu1";

  int effective_complexity(int p) const {
    return max_split_complexity <= 0 ? p : std::min(max_split_complexity, p);
  }
  void validate() const;
};

io::json to_json(const TrainConfig& cfg);

// Training view of a dataset: class indices against one damage parameter.
struct TrainData {
  int n = 0, p = 0;
  std::vector<double> x;  // n * p, row-major
  std::vector<int> y;     // class index per row
  std::vector<double> w;  // positive weight per row
  std::vector<double> class_values;
  std::vector<std::string> feature_names;

  const double* row(int i) const { return x.data() + static_cast<std::size_t>(i) * p; }
  int n_classes() const { return static_cast<int>(class_values.size()); }
  double total_weight() const;
  void validate() const;
};

TrainData make_train_data(const Dataset& d, const std::string& target);

struct TrainReport {
  std::vector<std::vector<double>> traces;  // per restart: objective after the
                                            // greedy init, then after each
                                            // accepted move
  std::vector<double> objectives;           // final objective per restart
  int chosen_restart = -1;
  double objective = 0.0;
  io::json to_json() const;
};

// Weighted misclassification rate using the tree's stored leaf labels.
double tree_error_rate(const Tree& t, const TrainData& d);
double tree_objective(const Tree& t, const TrainData& d, double alpha);

// Deterministic greedy initializer over all features (axis splits, weighted
// Gini, midpoint thresholds; splits proceed while impurity remains even at
// zero Gini gain so parity-style interactions are not stopped at the root).
Tree greedy_tree(const TrainData& d, const TrainConfig& cfg);

// Local search from an initial tree. The initializer must match the data and
// config (labels, feature count, depth and sparsity budgets); leaves that end
// up short of min_leaf rows are repaired by splicing or collapsing before the
// search starts. order_key seeds the per-pass node visit order. If trace is
// given, the exactly recomputed objective is appended after every accepted
// move.
Tree local_search(const TrainData& d, const TrainConfig& cfg, const Tree& init,
                  std::uint64_t order_key, std::vector<double>* trace = nullptr);

// Full pipeline: greedy + axis-split local search per restart, then (when the
// sparsity budget allows more than one coefficient) hyperplane refinement
// warm-started from that restart's axis solution. Restarts run in parallel;
// the result is picked by (objective, fewer splits, lowest restart index) and
// is identical no matter how many threads execute.
Tree train_tree(const TrainData& d, const TrainConfig& cfg,
                TrainReport* report = nullptr);

}  // namespace dtwin
