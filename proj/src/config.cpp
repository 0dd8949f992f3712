#include "dtwin/config.hpp"

#include <stdexcept>

namespace dtwin {
namespace {

void validate(const AppConfig& c) {
  if (c.reference_weight <= 0) throw std::invalid_argument("reference_weight must be positive");
  if (c.load_factor <= 0) throw std::invalid_argument("load_factor must be positive");
  if (c.noise_variance < 0) throw std::invalid_argument("noise_variance must be nonnegative");
  if (c.samples_per_scenario < 1)
    throw std::invalid_argument("samples_per_scenario must be at least 1");
  if (!(c.test_fraction > 0 && c.test_fraction < 1))
    throw std::invalid_argument("test_fraction must lie in (0, 1)");
  if (c.layout != "installed" && c.layout != "candidate")
    throw std::invalid_argument("layout must be 'installed' or 'candidate'");
  if (c.depth < 0) throw std::invalid_argument("depth must be nonnegative");
  if (c.split_complexity < 0)
    throw std::invalid_argument("split_complexity must be nonnegative (0 = unlimited)");
  if (c.alpha < 0) throw std::invalid_argument("alpha must be nonnegative");
  if (c.min_leaf < 1) throw std::invalid_argument("min_leaf must be at least 1");
  if (c.restarts < 1) throw std::invalid_argument("restarts must be at least 1");
}

}  // namespace

std::vector<Rect> default_damage_regions() {
  // Region 1 inboard of mid-span, region 2 further outboard, both on the
  // compression side of the chord.
  return {Rect{0.390, 0.520, 0.550, 0.950}, Rect{0.675, 0.825, 0.550, 0.860}};
}

AppConfig default_config() {
  AppConfig c;
  c.plate.damage_regions = default_damage_regions();
  return c;
}

io::json to_json(const AppConfig& c) {
  io::json regions = io::json::array();
  for (const Rect& r : c.plate.damage_regions)
    regions.push_back({{"span", {r.span_lo, r.span_hi}}, {"chord", {r.chord_lo, r.chord_hi}}});
  return io::json{
      {"plate",
       {{"span", c.plate.span},
        {"chord", c.plate.chord},
        {"n_span", c.plate.n_span},
        {"n_chord", c.plate.n_chord},
        {"youngs_modulus", c.plate.material.youngs_modulus},
        {"poisson_ratio", c.plate.material.poisson_ratio},
        {"thickness", c.plate.material.thickness},
        {"clamp_root", c.plate.clamp_root},
        {"damage_regions", regions}}},
      {"levels", c.levels},
      {"reference_weight", c.reference_weight},
      {"load_factor", c.load_factor},
      {"noise_variance", c.noise_variance},
      {"samples_per_scenario", c.samples_per_scenario},
      {"test_fraction", c.test_fraction},
      {"layout", c.layout},
      {"seed", c.seed},
      {"train",
       {{"depth", c.depth},
        {"split_complexity", c.split_complexity},
        {"alpha", c.alpha},
        {"min_leaf", c.min_leaf},
        {"restarts", c.restarts}}}};
}

AppConfig config_from_json(const io::json& j) {
  AppConfig c = default_config();
  if (j.contains("plate")) {
    const io::json& p = j.at("plate");
    c.plate.span = p.value("span", c.plate.span);
    c.plate.chord = p.value("chord", c.plate.chord);
    c.plate.n_span = p.value("n_span", c.plate.n_span);
    c.plate.n_chord = p.value("n_chord", c.plate.n_chord);
    c.plate.material.youngs_modulus =
        p.value("youngs_modulus", c.plate.material.youngs_modulus);
    c.plate.material.poisson_ratio =
        p.value("poisson_ratio", c.plate.material.poisson_ratio);
    c.plate.material.thickness = p.value("thickness", c.plate.material.thickness);
    c.plate.clamp_root = p.value("clamp_root", c.plate.clamp_root);
    if (p.contains("damage_regions")) {
      c.plate.damage_regions.clear();
      for (const io::json& r : p.at("damage_regions")) {
        Rect rect;
        rect.span_lo = r.at("span").at(0).get<double>();
        rect.span_hi = r.at("span").at(1).get<double>();
        rect.chord_lo = r.at("chord").at(0).get<double>();
        rect.chord_hi = r.at("chord").at(1).get<double>();
        c.plate.damage_regions.push_back(rect);
      }
    }
  }
  if (j.contains("levels")) c.levels = j.at("levels").get<std::vector<double>>();
  c.reference_weight = j.value("reference_weight", c.reference_weight);
  c.load_factor = j.value("load_factor", c.load_factor);
  c.noise_variance = j.value("noise_variance", c.noise_variance);
  c.samples_per_scenario = j.value("samples_per_scenario", c.samples_per_scenario);
  c.test_fraction = j.value("test_fraction", c.test_fraction);
  c.layout = j.value("layout", c.layout);
  c.seed = j.value("seed", c.seed);
  if (j.contains("train")) {
    const io::json& t = j.at("train");
    c.depth = t.value("depth", c.depth);
    c.split_complexity = t.value("split_complexity", c.split_complexity);
    c.alpha = t.value("alpha", c.alpha);
    c.min_leaf = t.value("min_leaf", c.min_leaf);
    c.restarts = t.value("restarts", c.restarts);
  }
  validate(c);
  return c;
}

AppConfig load_config(const std::filesystem::path& p) {
  if (p.empty()) return default_config();
  return config_from_json(io::load_json(p));
}

}  // namespace dtwin
