#pragma once
// Classification trees over strain features. Splits may be axis-aligned
// (exactly one coefficient, normalized to +1) or sparse hyperplanes; a point
// routes left when a.x < b and right when a.x >= b. Leaves carry weighted
// class counts and predict the heaviest class.
#include <span>
#include <string>
#include <vector>

#include "dtwin/io.hpp"

namespace dtwin {

struct Split {
  // (feature index, coefficient), sorted by feature, all coefficients nonzero.
  std::vector<std::pair<int, double>> coeffs;
  double threshold = 0.0;

  int sparsity() const { return static_cast<int>(coeffs.size()); }
  bool axis_aligned() const { return coeffs.size() == 1 && coeffs[0].second == 1.0; }
  double project(const double* x) const {
    double s = 0.0;
    for (const auto& [f, a] : coeffs) s += a * x[f];
    return s;
  }
  bool goes_right(const double* x) const { return project(x) >= threshold; }
};

Split axis_split(int feature, double threshold);

struct TreeNode {
  bool leaf = true;
  Split split;                 // branches only
  int left = -1, right = -1;   // branches only
  std::vector<double> counts;  // leaves only: weighted count per class
};

struct PathStep {
  std::string test;   // e.g. "gauge_16 < 173.5"
  double observed;    // projection value at this node
  bool went_right;
};

struct Explanation {
  std::vector<PathStep> path;
  std::vector<double> leaf_counts;
  int label_index;
  double label_value;
};

class Tree {
 public:
  Tree() = default;
  Tree(std::vector<TreeNode> nodes, std::vector<double> label_values,
       std::vector<std::string> feature_names, std::string target,
       bool prefer_higher_label = false);

  int classify(std::span<const double> x) const;   // label index
  double classify_value(std::span<const double> x) const;
  std::vector<double> class_counts(std::span<const double> x) const;
  // Leaf counts normalized to a probability vector (sums to 1); classify()
  // is its argmax under the same tie rule.
  std::vector<double> class_probabilities(std::span<const double> x) const;
  Explanation explain(std::span<const double> x) const;

  std::vector<int> used_features() const;  // sorted, unique
  int depth() const;
  int n_splits() const;
  int n_leaves() const;
  int max_split_sparsity() const;

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const std::vector<double>& label_values() const { return label_values_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::string& target() const { return target_; }
  bool prefer_higher_label() const { return prefer_higher_label_; }
  io::json& info() { return info_; }
  const io::json& info() const { return info_; }

  int leaf_label(const TreeNode& node) const;  // argmax of counts with tie rule

  io::json to_json() const;
  static Tree from_json(const io::json& j);

  // Structural invariants: valid child indices, every node reachable exactly
  // once from the root, branch splits nonempty with sorted nonzero
  // coefficients (single-coefficient splits normalized to +1), finite
  // thresholds, leaf count vectors matching the label count with nonnegative
  // entries and positive totals.
  void validate() const;

 private:
  int route(std::span<const double> x) const;
  void check_features(std::span<const double> x) const;

  std::vector<TreeNode> nodes_;  // node 0 is the root
  std::vector<double> label_values_;
  std::vector<std::string> feature_names_;
  std::string target_ = "mu1";
  bool prefer_higher_label_ = false;
  io::json info_ = io::json::object();
};

void save_tree(const Tree& t, const std::filesystem::path& p);
Tree load_tree(const std::filesystem::path& p);

// Human-readable split test like "gauge_3 < 12.5" or
// "0.5*gauge_3 - 0.25*gauge_7 < 1.2".
std::string describe_split(const Split& s, const std::vector<std::string>& names);

}  // namespace dtwin
