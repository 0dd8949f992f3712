#include "dtwin/eval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dtwin/rng.hpp"

namespace dtwin {
namespace {

constexpr double kTol = 1e-12;

int exact_label_index(const std::vector<double>& labels, double v) {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == v) return static_cast<int>(i);
  return -1;
}

}  // namespace

io::json EvalMetrics::to_json() const {
  io::json conf = io::json::array();
  for (int r = 0; r < n_classes; ++r) {
    io::json row = io::json::array();
    for (int c = 0; c < n_classes; ++c)
      row.push_back(confusion[static_cast<std::size_t>(r) * n_classes + c]);
    conf.push_back(row);
  }
  return io::json{{"n", n},
                  {"n_classes", n_classes},
                  {"mae", mae},
                  {"error_rate", error_rate},
                  {"confusion", conf}};
}

EvalMetrics evaluate(const Tree& t, const Dataset& d) {
  if (t.feature_names() != d.feature_names)
    throw std::invalid_argument("tree and dataset have different feature columns");
  std::vector<double> label_copy;
  if (t.target() == "label")
    for (int l : d.label) label_copy.push_back(static_cast<double>(l));
  const std::vector<double>& mu =
      t.target() == "mu1" ? d.mu1 : t.target() == "mu2" ? d.mu2 : label_copy;
  EvalMetrics m;
  m.n = d.n();
  m.n_classes = static_cast<int>(t.label_values().size());
  m.confusion.assign(static_cast<std::size_t>(m.n_classes) * m.n_classes, 0);
  double werr = 0.0, wmae = 0.0, wtot = 0.0;
  for (int i = 0; i < d.n(); ++i) {
    const std::span<const double> xr(d.row(i), static_cast<std::size_t>(d.p()));
    const int pred = t.classify(xr);
    const double pred_value = t.label_values()[pred];
    const double w = d.weight[i];
    wtot += w;
    wmae += w * std::abs(mu[i] - pred_value);
    const int truth = exact_label_index(t.label_values(), mu[i]);
    if (truth < 0 || truth != pred) werr += w;
    if (truth >= 0)
      m.confusion[static_cast<std::size_t>(truth) * m.n_classes + pred] += 1;
  }
  if (wtot > 0) {
    m.mae = wmae / wtot;
    m.error_rate = werr / wtot;
  }
  return m;
}

io::CsvTable confusion_csv(const EvalMetrics& m, const std::vector<double>& labels) {
  io::CsvTable t;
  t.header.push_back("true\\predicted");
  for (double v : labels) t.header.push_back(io::format_double(v));
  for (int r = 0; r < m.n_classes; ++r) {
    std::vector<std::string> row{io::format_double(labels[r])};
    for (int c = 0; c < m.n_classes; ++c)
      row.push_back(std::to_string(m.confusion[static_cast<std::size_t>(r) * m.n_classes + c]));
    t.rows.push_back(std::move(row));
  }
  return t;
}

io::CsvTable SweepResult::to_csv() const {
  io::CsvTable t;
  t.header = {"depth",         "split_complexity", "mae_train",
              "mae_test",      "misclass_train",   "misclass_test",
              "n_features_used"};
  for (const SweepCell& c : cells)
    t.rows.push_back({std::to_string(c.depth), std::to_string(c.split_complexity),
                      io::format_double(c.train.mae), io::format_double(c.test.mae),
                      io::format_double(c.train.error_rate),
                      io::format_double(c.test.error_rate),
                      std::to_string(c.features_used)});
  return t;
}

io::json SweepResult::to_json() const {
  io::json cells_j = io::json::array();
  for (const SweepCell& c : cells)
    cells_j.push_back(io::json{{"depth", c.depth},
                               {"split_complexity", c.split_complexity},
                               {"objective", c.objective},
                               {"features_used", c.features_used},
                               {"train", c.train.to_json()},
                               {"test", c.test.to_json()}});
  io::json j{{"cells", cells_j}};
  // Test error may rise again past the best capacity; flag the winner so the
  // overfitting turn is visible without rescanning the grid.
  const SweepCell* best = nullptr;
  for (const SweepCell& c : cells)
    if (!best || c.test.mae < best->test.mae) best = &c;
  if (best)
    j["best_test"] = io::json{{"depth", best->depth},
                              {"split_complexity", best->split_complexity},
                              {"mae_test", best->test.mae}};
  return j;
}

SweepResult sweep(const Dataset& train_set, const Dataset& test_set,
                  const TrainConfig& base, std::vector<int> depths,
                  std::vector<int> complexities) {
  if (depths.empty() || complexities.empty())
    throw std::invalid_argument("sweep needs at least one depth and one complexity");
  const TrainData td = make_train_data(train_set, base.target);
  std::sort(depths.begin(), depths.end());
  const auto effective = [&](int c) { return c <= 0 ? td.p : std::min(c, td.p); };
  std::sort(complexities.begin(), complexities.end(),
            [&](int a, int b) { return effective(a) < effective(b); });

  const int nd = static_cast<int>(depths.size());
  const int nc = static_cast<int>(complexities.size());
  SweepResult out;
  out.cells.resize(static_cast<std::size_t>(nd) * nc);

  for (int di = 0; di < nd; ++di) {
    for (int ci = 0; ci < nc; ++ci) {
      TrainConfig cfg = base;
      cfg.max_depth = depths[di];
      cfg.max_split_complexity = complexities[ci];

      struct Candidate {
        Tree tree;
        double objective;
        double mae;
      };
      std::vector<Candidate> cands;
      auto offer = [&](Tree t) {
        Candidate c{std::move(t), 0.0, 0.0};
        c.objective = tree_objective(c.tree, td, cfg.alpha);
        c.mae = evaluate(c.tree, train_set).mae;
        cands.push_back(std::move(c));
      };
      offer(train_tree(td, cfg));
      const auto chain = [&](const Tree& prev, std::uint64_t which) {
        return local_search(td, cfg, prev,
                            rng::key(cfg.seed, rng::kChain,
                                     static_cast<std::uint64_t>(depths[di]),
                                     static_cast<std::uint64_t>(256 + complexities[ci]),
                                     which));
      };
      if (ci > 0)
        offer(chain(out.cells[static_cast<std::size_t>(di) * nc + ci - 1].tree, 1));
      if (di > 0)
        offer(chain(out.cells[static_cast<std::size_t>(di - 1) * nc + ci].tree, 2));

      int best = 0;
      for (int k = 1; k < static_cast<int>(cands.size()); ++k) {
        const Candidate& a = cands[k];
        const Candidate& b = cands[best];
        if (a.objective < b.objective - kTol ||
            (std::abs(a.objective - b.objective) <= kTol &&
             (a.mae < b.mae - kTol ||
              (std::abs(a.mae - b.mae) <= kTol &&
               a.tree.n_splits() < b.tree.n_splits()))))
          best = k;
      }

      SweepCell& cell = out.cells[static_cast<std::size_t>(di) * nc + ci];
      cell.depth = depths[di];
      cell.split_complexity = complexities[ci];
      cell.objective = cands[best].objective;
      cell.tree = std::move(cands[best].tree);
      cell.train = evaluate(cell.tree, train_set);
      cell.test = evaluate(cell.tree, test_set);
      cell.features_used = static_cast<int>(cell.tree.used_features().size());
    }
  }
  return out;
}

}  // namespace dtwin
