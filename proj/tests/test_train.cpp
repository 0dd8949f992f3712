#include "dtwin/train.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "dtwin/rng.hpp"
#include "iris_data.hpp"
#include "support.hpp"

using namespace dtwin;

namespace {

TrainData iris() {
  TrainData d;
  d.n = static_cast<int>(testdata::kIris.size());
  d.p = 4;
  d.class_values = {0.0, 1.0, 2.0};
  d.feature_names = {"sepal_length", "sepal_width", "petal_length", "petal_width"};
  for (const auto& r : testdata::kIris) {
    d.x.insert(d.x.end(), r.x, r.x + 4);
    d.y.push_back(r.species);
    d.w.push_back(1.0);
  }
  d.validate();
  return d;
}

TrainData xor_instance() {
  TrainData d;
  d.n = 4;
  d.p = 2;
  d.x = {0, 0, 1, 1, 0, 1, 1, 0};
  d.y = {0, 0, 1, 1};
  d.w = {1, 1, 1, 1};
  d.class_values = {0.0, 20.0};
  d.feature_names = {"x0", "x1"};
  d.validate();
  return d;
}

TrainConfig axis_cfg(int depth, int restarts = 4, std::uint64_t seed = 1) {
  TrainConfig cfg;
  cfg.max_depth = depth;
  cfg.max_split_complexity = 1;
  cfg.restarts = restarts;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("training config rejects bad settings") {
  TrainConfig cfg;
  cfg.max_depth = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.restarts = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.min_leaf = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.alpha = -0.1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.max_passes = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.target = "mu3";
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  cfg = {};
  cfg.max_split_complexity = 0;
  CHECK(cfg.effective_complexity(20) == 20);
  cfg.max_split_complexity = 5;
  CHECK(cfg.effective_complexity(3) == 3);
  CHECK(cfg.effective_complexity(20) == 5);
}

TEST_CASE("training data conversion picks sorted class grids") {
  Dataset ds;
  ds.feature_names = {"a", "b"};
  ds.gauge_ids = {-1, -1};
  ds.x = {0, 1, 2, 3, 4, 5};
  ds.mu1 = {20, 0, 20};
  ds.mu2 = {0, 0, 40};
  ds.label = {5, 0, 7};
  ds.weight = {1, 2, 1};

  const TrainData d1 = make_train_data(ds, "mu1");
  CHECK(d1.class_values == std::vector<double>{0, 20});
  CHECK(d1.y == std::vector<int>{1, 0, 1});
  CHECK(d1.w == std::vector<double>{1, 2, 1});
  CHECK(d1.total_weight() == 4.0);

  const TrainData d2 = make_train_data(ds, "mu2");
  CHECK(d2.class_values == std::vector<double>{0, 40});
  CHECK(d2.y == std::vector<int>{0, 0, 1});

  const TrainData d3 = make_train_data(ds, "label");
  CHECK(d3.class_values == std::vector<double>{0, 5, 7});
  CHECK(d3.y == std::vector<int>{1, 0, 2});

  CHECK_THROWS_AS((void)make_train_data(ds, "labels"), std::invalid_argument);
  ds.weight = {1, 0, 1};
  CHECK_THROWS_AS((void)make_train_data(ds, "mu1"), std::invalid_argument);
}

TEST_CASE("pure labels yield a single leaf") {
  TrainData d;
  d.n = 5;
  d.p = 1;
  d.x = {0, 1, 2, 3, 4};
  d.y = {0, 0, 0, 0, 0};
  d.w.assign(5, 1.0);
  d.class_values = {0.0, 20.0};
  d.feature_names = {"x0"};
  const Tree t = greedy_tree(d, axis_cfg(3));
  CHECK(t.n_splits() == 0);
  CHECK(tree_error_rate(t, d) == 0.0);
}

TEST_CASE("two separable points learn one split at the midpoint") {
  TrainData d;
  d.n = 2;
  d.p = 1;
  d.x = {0.0, 1.0};
  d.y = {0, 1};
  d.w = {1.0, 1.0};
  d.class_values = {0.0, 20.0};
  d.feature_names = {"x0"};
  const Tree t = greedy_tree(d, axis_cfg(2));
  CHECK(t.n_splits() == 1);
  CHECK(t.nodes()[0].split.axis_aligned());
  CHECK(t.nodes()[0].split.threshold == 0.5);
  CHECK(tree_error_rate(t, d) == 0.0);
}

TEST_CASE("greedy recovers the classic iris structure") {
  const TrainData d = iris();
  const Tree t = greedy_tree(d, axis_cfg(2));

  // Root: petal length against the midpoint between the two clusters.
  const Split& root = t.nodes()[0].split;
  REQUIRE_FALSE(t.nodes()[0].leaf);
  CHECK(root.axis_aligned());
  CHECK(root.coeffs[0].first == 2);
  CHECK(root.threshold == 1.9 + (3.0 - 1.9) / 2);

  // Left child is a pure leaf holding all 50 of the first species.
  const TreeNode& left = t.nodes()[t.nodes()[0].left];
  REQUIRE(left.leaf);
  CHECK(left.counts == std::vector<double>{50.0, 0.0, 0.0});

  // Right child separates the remaining two species on petal width.
  const TreeNode& right = t.nodes()[t.nodes()[0].right];
  REQUIRE_FALSE(right.leaf);
  CHECK(right.split.coeffs[0].first == 3);
  CHECK(right.split.threshold == 1.7 + (1.8 - 1.7) / 2);

  CHECK(tree_error_rate(t, d) == 6.0 / 150.0);
}

TEST_CASE("parity labels need two levels of axis splits") {
  const TrainData d = xor_instance();
  CHECK(testsupport::exhaustive_axis_rate(d, 1) == 0.5);
  const Tree t = train_tree(d, axis_cfg(2));
  CHECK(tree_error_rate(t, d) == 0.0);
  CHECK(t.depth() == 2);
}

TEST_CASE("accepted moves strictly decrease the objective") {
  const TrainData d = testsupport::random_instance(5, 40, 3, 3);
  TrainConfig cfg = axis_cfg(3, 6, 11);
  TrainReport report;
  const Tree t = train_tree(d, cfg, &report);

  REQUIRE(report.traces.size() == 6);
  REQUIRE(report.objectives.size() == 6);
  double best = report.objectives[0];
  for (std::size_t r = 0; r < report.traces.size(); ++r) {
    const auto& trace = report.traces[r];
    REQUIRE_FALSE(trace.empty());
    for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] < trace[i - 1]);
    CHECK(trace.back() == report.objectives[r]);
    best = std::min(best, report.objectives[r]);
  }
  CHECK(report.objective == best);
  CHECK(report.objectives[report.chosen_restart] == best);
  CHECK(tree_objective(t, d, cfg.alpha) == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("a search fixpoint passes through unchanged") {
  const TrainData d = testsupport::random_instance(9, 30, 2, 2);
  const TrainConfig cfg = axis_cfg(2, 4, 3);
  const Tree t = train_tree(d, cfg);
  const Tree again = local_search(d, cfg, t, rng::key(999, 777));
  CHECK(again.to_json()["nodes"] == t.to_json()["nodes"]);
  CHECK(tree_objective(again, d, cfg.alpha) == tree_objective(t, d, cfg.alpha));
}

TEST_CASE("initial trees must fit the data and the budgets") {
  const TrainData d = xor_instance();
  const TrainConfig cfg = axis_cfg(2);

  // wrong width
  {
    std::vector<TreeNode> nodes(1);
    nodes[0] = {true, {}, -1, -1, {1.0, 1.0}};
    const Tree t(std::move(nodes), d.class_values, {"x0"}, "mu1");
    CHECK_THROWS_AS((void)local_search(d, cfg, t, 1), std::invalid_argument);
  }
  // wrong labels
  {
    std::vector<TreeNode> nodes(1);
    nodes[0] = {true, {}, -1, -1, {1.0, 1.0, 1.0}};
    const Tree t(std::move(nodes), {0.0, 20.0, 40.0}, d.feature_names, "mu1");
    CHECK_THROWS_AS((void)local_search(d, cfg, t, 1), std::invalid_argument);
  }
  // too deep
  {
    const Tree deep = train_tree(d, axis_cfg(2));
    REQUIRE(deep.depth() == 2);
    TrainConfig shallow = axis_cfg(1);
    CHECK_THROWS_AS((void)local_search(d, shallow, deep, 1), std::invalid_argument);
  }
  // too dense
  {
    Split h;
    h.coeffs = {{0, 1.0}, {1, 1.0}};
    h.threshold = 1.0;
    std::vector<TreeNode> nodes(3);
    nodes[0] = {false, h, 1, 2, {}};
    nodes[1] = {true, {}, -1, -1, {1.0, 0.0}};
    nodes[2] = {true, {}, -1, -1, {0.0, 1.0}};
    const Tree t(std::move(nodes), d.class_values, d.feature_names, "mu1");
    CHECK_THROWS_AS((void)local_search(d, cfg, t, 1), std::invalid_argument);
  }
}

TEST_CASE("the trainer matches brute force on small instances") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const int n = 8 + static_cast<int>((seed * 3) % 7);
    const int p = 1 + static_cast<int>(seed % 3);
    const int k = 2 + static_cast<int>(seed % 2);
    const TrainData d = testsupport::random_instance(seed, n, p, k);
    const double oracle = testsupport::exhaustive_axis_rate(d, 2);
    const Tree t = train_tree(d, axis_cfg(2, 8, seed));
    INFO("seed ", seed, " n ", n, " p ", p, " k ", k);
    CHECK(tree_error_rate(t, d) == doctest::Approx(oracle).epsilon(1e-12));
  }
}

TEST_CASE("heavy weights steer the tree toward costly rows") {
  TrainData d;
  d.n = 3;
  d.p = 1;
  d.x = {0.0, 1.0, 2.0};
  d.y = {0, 1, 0};
  d.w = {1.0, 100.0, 1.0};
  d.class_values = {0.0, 20.0};
  d.feature_names = {"x0"};

  // One split cannot isolate the middle row, so the cheap row is sacrificed.
  const Tree t = train_tree(d, axis_cfg(1));
  CHECK(t.classify(std::vector<double>{1.0}) == 1);
  CHECK(tree_error_rate(t, d) == 1.0 / 102.0);

  // Unweighted, the majority wins instead.
  d.w = {1.0, 1.0, 1.0};
  const Tree u = train_tree(d, axis_cfg(1));
  CHECK(u.classify(std::vector<double>{1.0}) == 0);
}

TEST_CASE("structural budgets are respected") {
  const TrainData d = testsupport::random_instance(21, 40, 3, 3);
  TrainConfig cfg = axis_cfg(2, 4, 2);
  cfg.min_leaf = 5;
  const Tree t = train_tree(d, cfg);
  CHECK(t.depth() <= 2);
  CHECK(t.max_split_sparsity() <= 1);

  // Instance 21 is unweighted, so leaf count totals equal routed row counts.
  REQUIRE(d.total_weight() == static_cast<double>(d.n));
  for (const TreeNode& n : t.nodes()) {
    if (!n.leaf) continue;
    double rows = 0.0;
    for (double c : n.counts) rows += c;
    CHECK(rows >= 5.0);
  }

  TrainConfig dense = axis_cfg(2, 4, 2);
  dense.max_split_complexity = 2;
  const Tree h = train_tree(d, dense);
  CHECK(h.max_split_sparsity() <= 2);
}

TEST_CASE("hyperplanes never lose to axis splits") {
  for (std::uint64_t seed : {3u, 8u, 15u}) {
    const TrainData d = testsupport::random_instance(seed, 30, 3, 2);
    TrainConfig cfg = axis_cfg(2, 6, seed);
    TrainReport axis;
    (void)train_tree(d, cfg, &axis);

    TrainConfig dense = cfg;
    dense.max_split_complexity = 0;  // unlimited
    TrainReport hyper;
    (void)train_tree(d, dense, &hyper);
    CHECK(hyper.objective <= axis.objective + 1e-12);
  }
}

TEST_CASE("training is deterministic") {
  const TrainData d = testsupport::random_instance(4, 35, 3, 3);
  TrainConfig cfg = axis_cfg(3, 6, 77);
  cfg.max_split_complexity = 2;
  TrainReport r1, r2;
  const Tree a = train_tree(d, cfg, &r1);
  const Tree b = train_tree(d, cfg, &r2);
  CHECK(a.to_json() == b.to_json());
  CHECK(r1.to_json() == r2.to_json());
}

TEST_CASE("depth zero trains the majority leaf") {
  const TrainData d = iris();
  const Tree t = train_tree(d, axis_cfg(0));
  CHECK(t.n_splits() == 0);
  CHECK(tree_error_rate(t, d) == 100.0 / 150.0);
}

TEST_CASE("objective adds alpha per split to the error rate") {
  TrainData d;
  d.n = 2;
  d.p = 1;
  d.x = {0.0, 1.0};
  d.y = {0, 1};
  d.w = {75.0, 25.0};
  d.class_values = {0.0, 20.0};
  d.feature_names = {"x0"};

  std::vector<TreeNode> nodes(1);
  nodes[0] = {true, {}, -1, -1, {75.0, 25.0}};
  const Tree leaf(std::move(nodes), d.class_values, d.feature_names, "mu1");
  CHECK(tree_error_rate(leaf, d) == 0.25);
  CHECK(tree_objective(leaf, d, 0.5) == 0.25);

  // Scaling every weight leaves the rate unchanged.
  TrainData scaled = d;
  scaled.w = {150.0, 50.0};
  CHECK(tree_error_rate(leaf, scaled) == 0.25);

  std::vector<TreeNode> split_nodes(3);
  split_nodes[0] = {false, axis_split(0, 0.5), 1, 2, {}};
  split_nodes[1] = {true, {}, -1, -1, {75.0, 0.0}};
  split_nodes[2] = {true, {}, -1, -1, {0.0, 25.0}};
  const Tree split(std::move(split_nodes), d.class_values, d.feature_names, "mu1");
  CHECK(tree_error_rate(split, d) == 0.0);
  CHECK(tree_objective(split, d, 0.03) == 0.03);
}
