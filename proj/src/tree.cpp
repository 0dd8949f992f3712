#include "dtwin/tree.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace dtwin {

Split axis_split(int feature, double threshold) {
  Split s;
  s.coeffs = {{feature, 1.0}};
  s.threshold = threshold;
  return s;
}

std::string describe_split(const Split& s, const std::vector<std::string>& names) {
  auto name = [&](int f) {
    return f >= 0 && f < static_cast<int>(names.size()) ? names[f]
                                                        : "x" + std::to_string(f);
  };
  std::ostringstream out;
  if (s.axis_aligned()) {
    out << name(s.coeffs[0].first);
  } else {
    bool first = true;
    for (const auto& [f, a] : s.coeffs) {
      if (first) {
        if (a < 0) out << '-';
        first = false;
      } else {
        out << (a < 0 ? " - " : " + ");
      }
      const double mag = std::abs(a);
      if (mag != 1.0) out << io::format_double(mag) << '*';
      out << name(f);
    }
  }
  out << " < " << io::format_double(s.threshold);
  return out.str();
}

Tree::Tree(std::vector<TreeNode> nodes, std::vector<double> label_values,
           std::vector<std::string> feature_names, std::string target,
           bool prefer_higher_label)
    : nodes_(std::move(nodes)),
      label_values_(std::move(label_values)),
      feature_names_(std::move(feature_names)),
      target_(std::move(target)),
      prefer_higher_label_(prefer_higher_label) {
  validate();
}

int Tree::leaf_label(const TreeNode& node) const {
  int best = 0;
  for (int c = 1; c < static_cast<int>(node.counts.size()); ++c) {
    if (node.counts[c] > node.counts[best] ||
        (prefer_higher_label_ && node.counts[c] == node.counts[best]))
      best = c;
  }
  return best;
}

void Tree::check_features(std::span<const double> x) const {
  if (x.size() != feature_names_.size())
    throw std::invalid_argument("feature vector has wrong length");
}

int Tree::route(std::span<const double> x) const {
  check_features(x);
  int at = 0;
  while (!nodes_[at].leaf)
    at = nodes_[at].split.goes_right(x.data()) ? nodes_[at].right : nodes_[at].left;
  return at;
}

int Tree::classify(std::span<const double> x) const {
  return leaf_label(nodes_[route(x)]);
}

double Tree::classify_value(std::span<const double> x) const {
  return label_values_[classify(x)];
}

std::vector<double> Tree::class_counts(std::span<const double> x) const {
  return nodes_[route(x)].counts;
}

std::vector<double> Tree::class_probabilities(std::span<const double> x) const {
  std::vector<double> p = nodes_[route(x)].counts;
  double total = 0.0;
  for (double c : p) total += c;
  for (double& c : p) c /= total;  // validate() guarantees total > 0
  return p;
}

Explanation Tree::explain(std::span<const double> x) const {
  check_features(x);
  Explanation e;
  int at = 0;
  while (!nodes_[at].leaf) {
    const Split& s = nodes_[at].split;
    const bool right = s.goes_right(x.data());
    e.path.push_back({describe_split(s, feature_names_), s.project(x.data()), right});
    at = right ? nodes_[at].right : nodes_[at].left;
  }
  e.leaf_counts = nodes_[at].counts;
  e.label_index = leaf_label(nodes_[at]);
  e.label_value = label_values_[e.label_index];
  return e;
}

std::vector<int> Tree::used_features() const {
  std::set<int> s;
  for (const TreeNode& n : nodes_)
    if (!n.leaf)
      for (const auto& [f, a] : n.split.coeffs) s.insert(f);
  return {s.begin(), s.end()};
}

int Tree::depth() const {
  // Iterative depth over (node, depth) pairs; the tree is small.
  int best = 0;
  std::vector<std::pair<int, int>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [at, d] = stack.back();
    stack.pop_back();
    if (nodes_[at].leaf) {
      best = std::max(best, d);
    } else {
      stack.push_back({nodes_[at].left, d + 1});
      stack.push_back({nodes_[at].right, d + 1});
    }
  }
  return best;
}

int Tree::n_splits() const {
  int c = 0;
  for (const TreeNode& n : nodes_)
    if (!n.leaf) ++c;
  return c;
}

int Tree::n_leaves() const { return static_cast<int>(nodes_.size()) - n_splits(); }

int Tree::max_split_sparsity() const {
  int m = 0;
  for (const TreeNode& n : nodes_)
    if (!n.leaf) m = std::max(m, n.split.sparsity());
  return m;
}

void Tree::validate() const {
  if (nodes_.empty()) throw std::invalid_argument("tree has no nodes");
  if (label_values_.empty()) throw std::invalid_argument("tree has no labels");
  if (target_ != "mu1" && target_ != "mu2" && target_ != "label")
    throw std::invalid_argument("tree target must be mu1, mu2, or label");
  const int n = static_cast<int>(nodes_.size());
  std::vector<int> seen(n, 0);
  std::vector<int> stack{0};
  int visited = 0;
  while (!stack.empty()) {
    const int at = stack.back();
    stack.pop_back();
    if (at < 0 || at >= n) throw std::invalid_argument("tree child index out of range");
    if (seen[at]++) throw std::invalid_argument("tree node reachable twice");
    ++visited;
    const TreeNode& node = nodes_[at];
    if (node.leaf) {
      if (node.counts.size() != label_values_.size())
        throw std::invalid_argument("leaf count vector has wrong length");
      double total = 0.0;
      for (double c : node.counts) {
        if (!(c >= 0.0)) throw std::invalid_argument("leaf counts must be nonnegative");
        total += c;
      }
      if (!(total > 0.0) || !std::isfinite(total))
        throw std::invalid_argument("leaf counts must sum to a positive total");
    } else {
      if (node.split.coeffs.empty())
        throw std::invalid_argument("branch split has no coefficients");
      int prev = -1;
      for (const auto& [f, a] : node.split.coeffs) {
        if (f <= prev) throw std::invalid_argument("split coefficients must be sorted");
        if (f >= static_cast<int>(feature_names_.size()))
          throw std::invalid_argument("split feature index out of range");
        if (a == 0.0 || !std::isfinite(a))
          throw std::invalid_argument("split coefficients must be finite and nonzero");
        prev = f;
      }
      if (node.split.coeffs.size() == 1 && node.split.coeffs[0].second != 1.0)
        throw std::invalid_argument("single-feature splits must have coefficient 1");
      if (!std::isfinite(node.split.threshold))
        throw std::invalid_argument("split threshold must be finite");
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }
  if (visited != n) throw std::invalid_argument("tree has unreachable nodes");
}

io::json Tree::to_json() const {
  io::json nodes = io::json::array();
  for (const TreeNode& n : nodes_) {
    if (n.leaf) {
      nodes.push_back({{"leaf", true}, {"counts", n.counts}});
    } else {
      io::json coeffs = io::json::array();
      for (const auto& [f, a] : n.split.coeffs) coeffs.push_back({f, a});
      nodes.push_back({{"leaf", false},
                       {"coefficients", coeffs},
                       {"threshold", n.split.threshold},
                       {"left", n.left},
                       {"right", n.right}});
    }
  }
  return io::json{{"format", "dtwin-tree-v1"},
                  {"target", target_},
                  {"label_values", label_values_},
                  {"feature_names", feature_names_},
                  {"prefer_higher_label", prefer_higher_label_},
                  {"nodes", nodes},
                  {"info", info_}};
}

Tree Tree::from_json(const io::json& j) {
  if (j.value("format", "") != "dtwin-tree-v1")
    throw std::runtime_error("unrecognized tree format");
  std::vector<TreeNode> nodes;
  for (const io::json& nj : j.at("nodes")) {
    TreeNode n;
    n.leaf = nj.at("leaf").get<bool>();
    if (n.leaf) {
      n.counts = nj.at("counts").get<std::vector<double>>();
    } else {
      for (const io::json& c : nj.at("coefficients"))
        n.split.coeffs.emplace_back(c.at(0).get<int>(), c.at(1).get<double>());
      n.split.threshold = nj.at("threshold").get<double>();
      n.left = nj.at("left").get<int>();
      n.right = nj.at("right").get<int>();
    }
    nodes.push_back(std::move(n));
  }
  Tree t(std::move(nodes), j.at("label_values").get<std::vector<double>>(),
         j.at("feature_names").get<std::vector<std::string>>(),
         j.at("target").get<std::string>(), j.value("prefer_higher_label", false));
  t.info() = j.value("info", io::json::object());
  return t;
}

void save_tree(const Tree& t, const std::filesystem::path& p) {
  io::save_json(p, t.to_json());
}

Tree load_tree(const std::filesystem::path& p) {
  return Tree::from_json(io::load_json(p));
}

}  // namespace dtwin
