#include "dtwin/mission.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dtwin/rng.hpp"

namespace dtwin {
namespace {

void check_tree(const Tree& t, const char* expect_target,
                const std::vector<Gauge>& gauges) {
  if (t.target() != expect_target)
    throw std::invalid_argument(std::string("mission tree must target ") + expect_target);
  if (t.feature_names().size() != gauges.size())
    throw std::invalid_argument("mission tree feature count does not match the layout");
  for (std::size_t i = 0; i < gauges.size(); ++i)
    if (t.feature_names()[i] != "gauge_" + std::to_string(gauges[i].id))
      throw std::invalid_argument("mission tree features do not match the layout gauges");
}

}  // namespace

double mission_truth(const MissionConfig& cfg, int step) {
  if (cfg.n_steps < 2) throw std::invalid_argument("mission needs at least 2 steps");
  return cfg.degrade_to * static_cast<double>(step) /
         static_cast<double>(cfg.n_steps - 1);
}

io::json MissionLog::summary() const {
  io::json obstacles = io::json::array();
  for (const MissionStep& s : steps)
    if (!s.obstacle_path.empty())
      obstacles.push_back(io::json{{"step", s.step}, {"path", s.obstacle_path}});
  int reductions = 0;
  int prev = 3;
  for (const MissionStep& s : steps) {
    if (s.capability < prev) ++reductions;
    if (s.capability > prev) ++reductions;  // reversals also show up here
    prev = s.capability;
  }
  return io::json{{"n_steps", static_cast<int>(steps.size())},
                  {"switch_step", switch_step},
                  {"capability_changes", reductions},
                  {"final_capability", steps.empty() ? 3 : steps.back().capability},
                  {"obstacles", obstacles}};
}

io::CsvTable MissionLog::to_csv() const {
  io::CsvTable t;
  t.header = {"step", "true_mu1", "true_mu2", "load_factor"};
  t.header.insert(t.header.end(), feature_names.begin(), feature_names.end());
  for (const char* c : {"mu1_hat", "mu2_hat", "capability", "obstacle_path"})
    t.header.push_back(c);
  for (const MissionStep& s : steps) {
    std::vector<std::string> row{std::to_string(s.step), io::format_double(s.true_mu1),
                                 io::format_double(s.true_mu2),
                                 io::format_double(s.load_factor)};
    for (double v : s.features) row.push_back(io::format_double(v));
    row.push_back(io::format_double(s.mu1_hat));
    row.push_back(io::format_double(s.mu2_hat));
    row.push_back(std::to_string(s.capability));
    row.push_back(s.obstacle_path);
    t.rows.push_back(std::move(row));
  }
  return t;
}

MissionLog run_mission(const PlateModel& model, const SensorLayout& layout,
                       const LoadCase& base, const Tree& tree_mu1,
                       const Tree& tree_mu2, const MissionConfig& cfg) {
  if (cfg.n_steps < 2) throw std::invalid_argument("mission needs at least 2 steps");
  if (cfg.noise_variance < 0)
    throw std::invalid_argument("noise variance must be nonnegative");
  const auto gauges = layout.usable();
  check_tree(tree_mu1, "mu1", gauges);
  check_tree(tree_mu2, "mu2", gauges);
  const double sigma = std::sqrt(cfg.noise_variance);

  MissionLog log;
  for (const Gauge& g : gauges)
    log.feature_names.push_back("gauge_" + std::to_string(g.id));
  int capability = 3;
  for (int t = 0; t < cfg.n_steps; ++t) {
    MissionStep rec;
    rec.step = t;
    rec.true_mu1 = rec.true_mu2 = mission_truth(cfg, t);
    rec.load_factor = capability == 3 ? cfg.aggressive_load : cfg.conservative_load;

    const LoadCase load{rec.load_factor, base.reference_weight};
    const DamageScenario truth{rec.true_mu1, rec.true_mu2};
    const std::vector<double> strain = model.gauge_strain(truth, load, gauges);
    std::vector<double> features(strain.size());
    for (std::size_t g = 0; g < strain.size(); ++g) {
      const double noise =
          sigma * rng::gaussian(rng::key(cfg.seed, rng::kMission,
                                         static_cast<std::uint64_t>(t),
                                         static_cast<std::uint64_t>(gauges[g].id)));
      features[g] = (strain[g] + noise) / rec.load_factor;
    }

    rec.features = features;
    rec.mu1_hat = tree_mu1.classify_value(features);
    rec.mu2_hat = tree_mu2.classify_value(features);
    if (capability == 3 && std::max(rec.mu1_hat, rec.mu2_hat) >= cfg.failure_threshold) {
      capability = 2;  // latched: capability never recovers in flight
      log.switch_step = t;
    }
    rec.capability = capability;
    if (std::find(cfg.obstacle_steps.begin(), cfg.obstacle_steps.end(), t) !=
        cfg.obstacle_steps.end())
      rec.obstacle_path = capability == 3 ? "aggressive" : "conservative";
    log.steps.push_back(std::move(rec));
  }
  return log;
}

}  // namespace dtwin
