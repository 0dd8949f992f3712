#pragma once
// Brute-force references for the learner tests: exhaustive enumeration of
// axis trees up to depth 2 (thresholds between consecutive distinct values,
// matching the learner's own convention) and a generator of small random
// labeled instances.
#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "dtwin/rng.hpp"
#include "dtwin/train.hpp"

namespace testsupport {

inline double subset_leaf_error(const dtwin::TrainData& d,
                                const std::vector<int>& rows) {
  std::vector<double> per_label(static_cast<std::size_t>(d.n_classes()), 0.0);
  double total = 0.0;
  for (int r : rows) {
    per_label[static_cast<std::size_t>(d.y[r])] += d.w[r];
    total += d.w[r];
  }
  return total - *std::max_element(per_label.begin(), per_label.end());
}

// Least achievable weighted misclassification (absolute, not a rate) over
// all axis trees of at most the given depth on the row subset.
inline double exhaustive_axis_error(const dtwin::TrainData& d,
                                    const std::vector<int>& rows, int depth,
                                    int min_leaf = 1) {
  double best = subset_leaf_error(d, rows);
  if (depth == 0 || best == 0.0) return best;
  for (int f = 0; f < d.p; ++f) {
    std::vector<double> vals;
    vals.reserve(rows.size());
    for (int r : rows) vals.push_back(d.row(r)[f]);
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
      const double thr = vals[i] + (vals[i + 1] - vals[i]) / 2;
      std::vector<int> left, right;
      for (int r : rows) (d.row(r)[f] < thr ? left : right).push_back(r);
      if (static_cast<int>(left.size()) < min_leaf ||
          static_cast<int>(right.size()) < min_leaf)
        continue;
      const double err = exhaustive_axis_error(d, left, depth - 1, min_leaf) +
                         exhaustive_axis_error(d, right, depth - 1, min_leaf);
      best = std::min(best, err);
    }
  }
  return best;
}

// Optimal weighted misclassification RATE over axis trees of depth <= depth.
inline double exhaustive_axis_rate(const dtwin::TrainData& d, int depth,
                                   int min_leaf = 1) {
  std::vector<int> rows(static_cast<std::size_t>(d.n));
  for (int i = 0; i < d.n; ++i) rows[static_cast<std::size_t>(i)] = i;
  return exhaustive_axis_error(d, rows, depth, min_leaf) / d.total_weight();
}

// Small random instance: integer-grid features (deliberately tie-heavy),
// labels from a noisy threshold rule on one feature, occasional non-unit
// integer weights.
inline dtwin::TrainData random_instance(std::uint64_t seed, int n, int p,
                                        int k) {
  namespace rng = dtwin::rng;
  rng::Stream st(rng::key(seed, rng::kInstance));
  dtwin::TrainData d;
  d.n = n;
  d.p = p;
  for (int c = 0; c < k; ++c) d.class_values.push_back(20.0 * c);
  for (int f = 0; f < p; ++f) d.feature_names.push_back("x" + std::to_string(f));
  d.x.resize(static_cast<std::size_t>(n) * p);
  for (double& v : d.x) v = static_cast<double>(st.below(7));
  const int pilot = static_cast<int>(st.below(static_cast<std::uint64_t>(p)));
  const bool weighted = st.below(4) == 0;
  for (int i = 0; i < n; ++i) {
    int label;
    if (st.below(10) < 3) {  // noise rows keep the optimum nontrivial
      label = static_cast<int>(st.below(static_cast<std::uint64_t>(k)));
    } else {
      const double v = d.x[static_cast<std::size_t>(i) * p + pilot];
      label = std::min(k - 1, static_cast<int>(v) / (7 / k + 1));
    }
    d.y.push_back(label);
    d.w.push_back(weighted ? static_cast<double>(1 + st.below(3)) : 1.0);
  }
  d.validate();
  return d;
}

}  // namespace testsupport
