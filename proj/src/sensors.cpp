#include "dtwin/sensors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "dtwin/dataset.hpp"
#include "dtwin/rng.hpp"

namespace dtwin {
namespace {

constexpr double kTol = 1e-12;

std::string join_ids(const std::vector<int>& ids) {
  std::ostringstream out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out << ';';
    out << ids[i];
  }
  return out.str();
}

}  // namespace

Tree reindex_tree(const Tree& t, const std::vector<int>& from_ids,
                  const std::vector<int>& to_ids,
                  const std::vector<std::string>& to_names) {
  std::vector<TreeNode> nodes = t.nodes();
  for (TreeNode& n : nodes) {
    if (n.leaf) continue;
    for (auto& [f, a] : n.split.coeffs) {
      if (f < 0 || f >= static_cast<int>(from_ids.size()))
        throw std::invalid_argument("tree feature outside the source columns");
      const int id = from_ids[f];
      const auto it = std::find(to_ids.begin(), to_ids.end(), id);
      if (it == to_ids.end())
        throw std::invalid_argument("gauge " + std::to_string(id) +
                                    " missing from the target columns");
      f = static_cast<int>(it - to_ids.begin());
    }
    std::sort(n.split.coeffs.begin(), n.split.coeffs.end());
  }
  Tree out(std::move(nodes), t.label_values(), to_names, t.target(),
           t.prefer_higher_label());
  return out;
}

io::CsvTable PlacementStudy::to_csv() const {
  io::CsvTable t;
  t.header = {"depth",
              "fixed_mae_train",
              "fixed_mae_test",
              "upgraded_mae_train",
              "upgraded_mae_test",
              "fixed_misclass_test",
              "upgraded_misclass_test",
              "n_kept_installed",
              "n_added_candidates",
              "added_candidate_ids"};
  for (const PlacementRow& r : rows)
    t.rows.push_back({std::to_string(r.depth), io::format_double(r.fixed_train.mae),
                      io::format_double(r.fixed_test.mae),
                      io::format_double(r.upgraded_train.mae),
                      io::format_double(r.upgraded_test.mae),
                      io::format_double(r.fixed_test.error_rate),
                      io::format_double(r.upgraded_test.error_rate),
                      std::to_string(r.kept_installed.size()),
                      std::to_string(r.added_candidates.size()),
                      join_ids(r.added_candidates)});
  return t;
}

io::json PlacementStudy::to_json() const {
  io::json rows_j = io::json::array();
  for (const PlacementRow& r : rows)
    rows_j.push_back(io::json{{"depth", r.depth},
                              {"fixed_objective", r.fixed_objective},
                              {"upgraded_objective", r.upgraded_objective},
                              {"fixed_train", r.fixed_train.to_json()},
                              {"fixed_test", r.fixed_test.to_json()},
                              {"upgraded_train", r.upgraded_train.to_json()},
                              {"upgraded_test", r.upgraded_test.to_json()},
                              {"kept_installed", r.kept_installed},
                              {"added_candidates", r.added_candidates}});
  return io::json{{"rows", rows_j}};
}

PlacementStudy placement_study(const PlateModel& model, const ModelLibrary& lib,
                               const SensorLayout& installed,
                               const SensorLayout& candidate, const LoadCase& load,
                               double noise_variance, int samples_per_scenario,
                               double test_fraction, const TrainConfig& base,
                               const std::vector<int>& depths) {
  // Shared noise keying means gauges common to both layouts read identically,
  // and per-label split streams put the same rows in train and test, so the
  // comparison isolates the effect of the extra positions.
  const Dataset ds_inst = generate_dataset(model, lib, installed, load,
                                           noise_variance, samples_per_scenario,
                                           base.seed);
  const Dataset ds_cand = generate_dataset(model, lib, candidate, load,
                                           noise_variance, samples_per_scenario,
                                           base.seed);
  const SplitResult sp_inst = stratified_split(ds_inst, test_fraction, base.seed);
  const SplitResult sp_cand = stratified_split(ds_cand, test_fraction, base.seed);
  const TrainData td_inst = make_train_data(sp_inst.train, base.target);
  const TrainData td_cand = make_train_data(sp_cand.train, base.target);

  PlacementStudy out;
  std::ostringstream map;
  for (const int depth : depths) {
    TrainConfig cfg = base;
    cfg.max_depth = depth;

    PlacementRow row;
    row.depth = depth;
    row.fixed_tree = train_tree(td_inst, cfg);
    row.fixed_objective = tree_objective(row.fixed_tree, td_inst, cfg.alpha);
    row.fixed_train = evaluate(row.fixed_tree, sp_inst.train);
    row.fixed_test = evaluate(row.fixed_tree, sp_inst.test);

    Tree fresh = train_tree(td_cand, cfg);
    const Tree embedded_init = reindex_tree(row.fixed_tree, ds_inst.gauge_ids,
                                            ds_cand.gauge_ids, ds_cand.feature_names);
    Tree warmed = local_search(td_cand, cfg, embedded_init,
                               rng::key(cfg.seed, rng::kEmbed,
                                        static_cast<std::uint64_t>(depth)));
    const double obj_fresh = tree_objective(fresh, td_cand, cfg.alpha);
    const double obj_warm = tree_objective(warmed, td_cand, cfg.alpha);
    const bool take_warm =
        obj_warm < obj_fresh - kTol ||
        (std::abs(obj_warm - obj_fresh) <= kTol &&
         warmed.n_splits() < fresh.n_splits());
    row.upgraded_tree = take_warm ? std::move(warmed) : std::move(fresh);
    row.upgraded_objective = take_warm ? obj_warm : obj_fresh;
    row.upgraded_train = evaluate(row.upgraded_tree, sp_cand.train);
    row.upgraded_test = evaluate(row.upgraded_tree, sp_cand.test);

    for (int f : row.upgraded_tree.used_features()) {
      const int id = ds_cand.gauge_ids[f];
      (id <= 24 ? row.kept_installed : row.added_candidates).push_back(id);
    }

    // Planform chart: one line per chordwise row of gauges, root at the left.
    map << "depth " << depth << " selections ('+' kept installed, '*' added candidate,\n"
        << "'o' unused installed, '.' unused candidate, 'x' excluded)\n";
    std::vector<double> chords;
    for (const Gauge& g : candidate.gauges)
      if (std::find(chords.begin(), chords.end(), g.chord) == chords.end())
        chords.push_back(g.chord);
    std::sort(chords.begin(), chords.end(), std::greater<>());
    const auto used = row.upgraded_tree.used_features();
    for (double chord : chords) {
      std::string line(97, ' ');
      for (const Gauge& g : candidate.gauges) {
        if (g.chord != chord) continue;
        const int col = static_cast<int>(std::lround(g.span * 96.0));
        char mark;
        if (g.excluded) {
          mark = 'x';
        } else {
          const auto it = std::find(ds_cand.gauge_ids.begin(), ds_cand.gauge_ids.end(), g.id);
          const int f = static_cast<int>(it - ds_cand.gauge_ids.begin());
          const bool sel = std::find(used.begin(), used.end(), f) != used.end();
          mark = sel ? (g.installed ? '+' : '*') : (g.installed ? 'o' : '.');
        }
        line[static_cast<std::size_t>(col)] = mark;
      }
      char label[32];
      std::snprintf(label, sizeof label, "chord %.2f |", chord);
      map << label << line << "|\n";
    }
    map << '\n';

    out.rows.push_back(std::move(row));
  }
  out.map_text = map.str();
  return out;
}

}  // namespace dtwin
