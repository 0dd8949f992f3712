#pragma once
// Labeled strain datasets: noisy gauge readings normalized by load factor,
// one label per library scenario. Rows are stored row-major; columns follow
// the usable gauges of the layout that produced them.
#include <cstdint>
#include <string>
#include <vector>

#include "dtwin/io.hpp"
#include "dtwin/layout.hpp"
#include "dtwin/plate.hpp"
#include "dtwin/types.hpp"

namespace dtwin {

struct Dataset {
  std::vector<std::string> feature_names;  // "gauge_<id>"
  std::vector<int> gauge_ids;              // id per column
  std::vector<double> x;                   // n * p, row-major
  std::vector<double> mu1, mu2;            // true damage per row
  std::vector<int> label;                  // scenario index per row
  std::vector<double> weight;              // per-row training weight
  io::json metadata = io::json::object();

  int n() const { return static_cast<int>(label.size()); }
  int p() const { return static_cast<int>(feature_names.size()); }
  const double* row(int i) const { return x.data() + static_cast<std::size_t>(i) * p(); }

  // Appends rows of a schema-identical dataset (weighted augmentation).
  void append(const Dataset& other);

  std::string hash() const;  // content fingerprint over the canonical CSV
};

// Raw strain vector -> feature vector: divide by load factor.
std::vector<double> normalize_features(const std::vector<double>& strain,
                                       double load_factor);

// samples_per_scenario noisy draws per library scenario at the given load.
// Noise is N(0, variance) in microstrain, added before normalization, and is
// keyed by (seed, scenario, sample, gauge id) so two layouts sharing a gauge
// see identical noise on it.
Dataset generate_dataset(const PlateModel& model, const ModelLibrary& lib,
                         const SensorLayout& layout, const LoadCase& load,
                         double noise_variance, int samples_per_scenario,
                         std::uint64_t seed);

// Stratified split with exact per-label counts: each label contributes
// lround(test_fraction * count) rows to the test set. Throws if any label has
// fewer than two rows.
struct SplitResult {
  Dataset train;
  Dataset test;
};
SplitResult stratified_split(const Dataset& d, double test_fraction,
                             std::uint64_t seed);

// CSV next to a .meta.json sidecar; doubles survive the round trip exactly.
void save_dataset(const Dataset& d, const std::filesystem::path& csv_path);
Dataset load_dataset(const std::filesystem::path& csv_path);

}  // namespace dtwin
