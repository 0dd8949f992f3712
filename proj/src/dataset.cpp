#include "dtwin/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>
#include <stdexcept>

#include "dtwin/rng.hpp"

namespace dtwin {
namespace {

std::string canonical_csv(const Dataset& d) {
  std::ostringstream out;
  for (const auto& name : d.feature_names) out << name << ',';
  out << "mu1,mu2,label,weight\n";
  for (int i = 0; i < d.n(); ++i) {
    const double* r = d.row(i);
    for (int f = 0; f < d.p(); ++f) out << io::format_double(r[f]) << ',';
    out << io::format_double(d.mu1[i]) << ',' << io::format_double(d.mu2[i]) << ','
        << d.label[i] << ',' << io::format_double(d.weight[i]) << '\n';
  }
  return out.str();
}

Dataset like(const Dataset& d) {
  Dataset out;
  out.feature_names = d.feature_names;
  out.gauge_ids = d.gauge_ids;
  out.metadata = d.metadata;
  return out;
}

void push_row(Dataset& out, const Dataset& d, int i) {
  const double* r = d.row(i);
  out.x.insert(out.x.end(), r, r + d.p());
  out.mu1.push_back(d.mu1[i]);
  out.mu2.push_back(d.mu2[i]);
  out.label.push_back(d.label[i]);
  out.weight.push_back(d.weight[i]);
}

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw std::runtime_error("bad numeric cell: '" + s + "'");
  return v;
}

}  // namespace

void Dataset::append(const Dataset& other) {
  if (other.feature_names != feature_names)
    throw std::invalid_argument("cannot append datasets with different columns");
  for (int i = 0; i < other.n(); ++i) push_row(*this, other, i);
}

std::string Dataset::hash() const { return io::hash_hex(canonical_csv(*this)); }

std::vector<double> normalize_features(const std::vector<double>& strain,
                                       double load_factor) {
  if (load_factor == 0) throw std::domain_error("load factor must be nonzero");
  std::vector<double> out(strain.size());
  for (std::size_t i = 0; i < strain.size(); ++i) out[i] = strain[i] / load_factor;
  return out;
}

Dataset generate_dataset(const PlateModel& model, const ModelLibrary& lib,
                         const SensorLayout& layout, const LoadCase& load,
                         double noise_variance, int samples_per_scenario,
                         std::uint64_t seed) {
  if (samples_per_scenario < 1)
    throw std::invalid_argument("samples_per_scenario must be at least 1");
  if (noise_variance < 0) throw std::invalid_argument("noise variance must be nonnegative");
  const auto gauges = layout.usable();
  if (gauges.empty()) throw std::invalid_argument("layout has no usable gauges");

  Dataset d;
  for (const Gauge& g : gauges) {
    d.feature_names.push_back("gauge_" + std::to_string(g.id));
    d.gauge_ids.push_back(g.id);
  }
  const double sigma = std::sqrt(noise_variance);
  const int s = samples_per_scenario;
  d.x.reserve(static_cast<std::size_t>(lib.scenarios.size()) * s * gauges.size());
  for (std::size_t j = 0; j < lib.scenarios.size(); ++j) {
    const auto strain = model.gauge_strain(lib.scenarios[j], load, gauges);
    for (int k = 0; k < s; ++k) {
      for (std::size_t g = 0; g < gauges.size(); ++g) {
        const double noise =
            sigma * rng::gaussian(rng::key(seed, rng::kNoise, j, k,
                                           static_cast<std::uint64_t>(gauges[g].id)));
        d.x.push_back((strain[g] + noise) / load.load_factor);
      }
      d.mu1.push_back(lib.scenarios[j].mu1);
      d.mu2.push_back(lib.scenarios[j].mu2);
      d.label.push_back(static_cast<int>(j));
      d.weight.push_back(1.0);
    }
  }
  d.metadata = io::json{{"seed", seed},
                        {"samples_per_scenario", s},
                        {"load_factor", load.load_factor},
                        {"reference_weight", load.reference_weight},
                        {"noise_variance", noise_variance},
                        {"levels", lib.levels},
                        {"gauge_ids", d.gauge_ids},
                        {"layout_hash", layout.hash()}};
  return d;
}

SplitResult stratified_split(const Dataset& d, double test_fraction,
                             std::uint64_t seed) {
  if (!(test_fraction > 0 && test_fraction < 1))
    throw std::invalid_argument("test fraction must lie in (0, 1)");
  std::map<int, std::vector<int>> by_label;
  for (int i = 0; i < d.n(); ++i) by_label[d.label[i]].push_back(i);

  std::vector<char> in_test(d.n(), 0);
  for (auto& [label, rows] : by_label) {
    if (rows.size() < 2)
      throw std::invalid_argument("stratified split needs at least 2 rows per label");
    rng::Stream stream(rng::key(seed, rng::kSplit, static_cast<std::uint64_t>(label)));
    stream.shuffle(rows);
    const long want = std::lround(test_fraction * static_cast<double>(rows.size()));
    const long take = std::clamp(want, 1L, static_cast<long>(rows.size()) - 1);
    for (long k = 0; k < take; ++k) in_test[rows[k]] = 1;
  }

  SplitResult out{like(d), like(d)};
  for (int i = 0; i < d.n(); ++i) push_row(in_test[i] ? out.test : out.train, d, i);
  const std::string parent = d.hash();
  auto tag = [&](Dataset& part, const char* role) {
    part.metadata["split"] = io::json{
        {"fraction", test_fraction}, {"seed", seed}, {"role", role}, {"parent", parent}};
  };
  tag(out.train, "train");
  tag(out.test, "test");
  return out;
}

void save_dataset(const Dataset& d, const std::filesystem::path& csv_path) {
  io::write_file(csv_path, canonical_csv(d));
  std::filesystem::path meta = csv_path;
  meta.replace_extension(".meta.json");
  io::save_json(meta, d.metadata);
}

Dataset load_dataset(const std::filesystem::path& csv_path) {
  const io::CsvTable t = io::read_csv(csv_path);
  if (t.header.size() < 5)
    throw std::runtime_error("dataset csv needs feature columns plus mu1,mu2,label,weight");
  const std::size_t p = t.header.size() - 4;
  const std::vector<std::string> tail(t.header.begin() + static_cast<long>(p), t.header.end());
  if (tail != std::vector<std::string>{"mu1", "mu2", "label", "weight"})
    throw std::runtime_error("dataset csv must end with mu1,mu2,label,weight columns");

  Dataset d;
  for (std::size_t f = 0; f < p; ++f) {
    const std::string& name = t.header[f];
    d.feature_names.push_back(name);
    int id = -1;
    if (name.rfind("gauge_", 0) == 0) id = std::atoi(name.c_str() + 6);
    d.gauge_ids.push_back(id);
  }
  for (const auto& row : t.rows) {
    if (row.size() != t.header.size())
      throw std::runtime_error("dataset csv row has wrong cell count");
    for (std::size_t f = 0; f < p; ++f) d.x.push_back(parse_double(row[f]));
    d.mu1.push_back(parse_double(row[p]));
    d.mu2.push_back(parse_double(row[p + 1]));
    d.label.push_back(std::atoi(row[p + 2].c_str()));
    d.weight.push_back(parse_double(row[p + 3]));
  }
  std::filesystem::path meta = csv_path;
  meta.replace_extension(".meta.json");
  if (std::filesystem::exists(meta)) d.metadata = io::load_json(meta);
  return d;
}

}  // namespace dtwin
