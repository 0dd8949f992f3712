#include "dtwin/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "CLI11.hpp"
#include "dtwin/config.hpp"
#include "dtwin/dataset.hpp"
#include "dtwin/eval.hpp"
#include "dtwin/mission.hpp"
#include "dtwin/sensors.hpp"
#include "dtwin/train.hpp"

namespace dtwin {
namespace {

namespace fs = std::filesystem;

// Deterministic record of one command run: resolved options plus content
// hashes of every input and output. Wall-clock timing goes to stdout only so
// artifact bytes stay identical across reruns.
class Manifest {
 public:
  explicit Manifest(std::string command) {
    j_["command"] = std::move(command);
    j_["options"] = io::json::object();
    j_["inputs"] = io::json::object();
    j_["outputs"] = io::json::object();
  }

  io::json& options() { return j_["options"]; }

  void input(const fs::path& p) {
    j_["inputs"][p.filename().string()] = io::file_hash_hex(p);
  }
  void output(const fs::path& p) {
    j_["outputs"][p.filename().string()] = io::file_hash_hex(p);
  }
  void save(const fs::path& dir) { io::save_json(dir / "manifest.json", j_); }

 private:
  io::json j_;
};

double wall_seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

AppConfig config_for(const std::string& config_path) {
  return config_path.empty() ? default_config() : load_config(config_path);
}

SensorLayout layout_for(const AppConfig& cfg) {
  return cfg.layout == "candidate" ? candidate_layout(cfg.plate.damage_regions)
                                   : installed_layout(cfg.plate.damage_regions);
}

std::vector<int> parse_int_list(const std::string& text, const char* what) {
  std::vector<int> out;
  std::istringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (cell.empty()) continue;
    std::size_t used = 0;
    const int v = std::stoi(cell, &used);
    if (used != cell.size())
      throw std::invalid_argument(std::string("bad ") + what + " list: " + text);
    out.push_back(v);
  }
  if (out.empty())
    throw std::invalid_argument(std::string(what) + " list is empty: " + text);
  return out;
}

void save_meta_outputs(Manifest& m, const fs::path& csv) {
  m.output(csv);
  fs::path meta = csv;
  meta.replace_extension(".meta.json");
  m.output(meta);
}

// ----------------------------------------------------------- subcommands ---

int cmd_generate(const AppConfig& cfg, const std::string& out_dir) {
  const PlateModel model(cfg.plate);
  const SensorLayout layout = layout_for(cfg);
  const ModelLibrary lib = build_library(cfg.levels);
  const Dataset ds = generate_dataset(model, lib, layout, cfg.load(),
                                      cfg.noise_variance, cfg.samples_per_scenario,
                                      cfg.seed);
  const SplitResult sp = stratified_split(ds, cfg.test_fraction, cfg.seed);

  const fs::path out(out_dir);
  Manifest m("generate");
  m.options() = to_json(cfg);
  io::save_json(out / "config.json", to_json(cfg));
  m.output(out / "config.json");
  io::write_csv(out / "layout.csv", layout.to_csv());
  m.output(out / "layout.csv");
  save_dataset(ds, out / "data.csv");
  save_meta_outputs(m, out / "data.csv");
  save_dataset(sp.train, out / "train.csv");
  save_meta_outputs(m, out / "train.csv");
  save_dataset(sp.test, out / "test.csv");
  save_meta_outputs(m, out / "test.csv");
  m.save(out);

  std::printf("generated %d rows x %d features (train %d / test %d), data hash %s\n",
              ds.n(), ds.p(), sp.train.n(), sp.test.n(), ds.hash().c_str());
  return 0;
}

int cmd_train(const std::string& data_path, const std::string& out_dir,
              const TrainConfig& tc) {
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset ds = load_dataset(data_path);
  const TrainData td = make_train_data(ds, tc.target);
  TrainReport rep;
  Tree tree = train_tree(td, tc, &rep);
  const io::json config_json = to_json(tc);
  tree.info()["dataset_hash"] = ds.hash();
  tree.info()["config_hash"] = io::hash_hex(config_json.dump());
  const double wall = wall_seconds_since(t0);

  const fs::path out(out_dir);
  Manifest m("train");
  m.options() = io::json{{"dataset", data_path},
                         {"target", tc.target},
                         {"depth", tc.max_depth},
                         {"split_complexity", tc.max_split_complexity},
                         {"alpha", tc.alpha},
                         {"min_leaf", tc.min_leaf},
                         {"restarts", tc.restarts},
                         {"seed", tc.seed}};
  m.input(data_path);
  save_tree(tree, out / "tree.json");
  m.output(out / "tree.json");
  io::json report_json = rep.to_json();
  report_json["config"] = config_json;
  io::save_json(out / "train_report.json", report_json);
  m.output(out / "train_report.json");
  m.save(out);

  std::printf("trained %s tree: depth %d, %d splits, objective %.6g "
              "(restart %d of %d); wall %.2fs\n",
              tc.target.c_str(), tree.depth(), tree.n_splits(), rep.objective,
              rep.chosen_restart, tc.restarts, wall);
  return 0;
}

int cmd_eval(const std::string& tree_path, const std::string& data_path,
             const std::string& out_dir) {
  const Tree tree = load_tree(tree_path);
  const Dataset ds = load_dataset(data_path);
  const EvalMetrics metrics = evaluate(tree, ds);

  if (!out_dir.empty()) {
    const fs::path out(out_dir);
    Manifest m("evaluate");
    m.options() = io::json{{"tree", tree_path}, {"dataset", data_path}};
    m.input(tree_path);
    m.input(data_path);
    io::save_json(out / "eval.json", metrics.to_json());
    m.output(out / "eval.json");
    io::write_csv(out / "confusion.csv", confusion_csv(metrics, tree.label_values()));
    m.output(out / "confusion.csv");
    m.save(out);
  }
  std::printf("%s on %d rows: mae %.6g percent, misclassification %.6g\n",
              tree.target().c_str(), metrics.n, metrics.mae, metrics.error_rate);
  return 0;
}

int cmd_explain(const std::string& tree_path, const std::string& data_path,
                int row, const std::string& out_dir) {
  const Tree tree = load_tree(tree_path);
  const Dataset ds = load_dataset(data_path);
  if (row < 0 || row >= ds.n())
    throw std::out_of_range("row " + std::to_string(row) + " outside 0.." +
                            std::to_string(ds.n() - 1));
  const std::span<const double> x(ds.row(row), static_cast<std::size_t>(ds.p()));
  const Explanation e = tree.explain(x);

  std::ostringstream text;
  text << "row " << row << " (" << tree.target() << " true "
       << io::format_double(tree.target() == "mu1" ? ds.mu1[row] : ds.mu2[row])
       << ")\n";
  for (const PathStep& s : e.path)
    text << "  " << s.test << "  [value " << io::format_double(s.observed)
         << "] -> " << (s.went_right ? "right" : "left") << '\n';
  text << "predicted " << tree.target() << " = " << io::format_double(e.label_value)
       << " (leaf counts:";
  for (double c : e.leaf_counts) text << ' ' << io::format_double(c);
  text << ")\n";

  std::fputs(text.str().c_str(), stdout);
  if (!out_dir.empty()) {
    const fs::path out(out_dir);
    Manifest m("explain");
    m.options() = io::json{{"tree", tree_path}, {"dataset", data_path}, {"row", row}};
    m.input(tree_path);
    m.input(data_path);
    io::write_file(out / "explain.txt", text.str());
    m.output(out / "explain.txt");
    m.save(out);
  }
  return 0;
}

int cmd_sweep(const std::string& train_path, const std::string& test_path,
              const std::string& out_dir, const TrainConfig& base,
              const std::string& depths_text, const std::string& complexities_text) {
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset train_set = load_dataset(train_path);
  const Dataset test_set = load_dataset(test_path);
  const std::vector<int> depths = parse_int_list(depths_text, "depth");
  const std::vector<int> complexities = parse_int_list(complexities_text, "complexity");
  const SweepResult res = sweep(train_set, test_set, base, depths, complexities);
  const double wall = wall_seconds_since(t0);

  const fs::path out(out_dir);
  Manifest m("sweep");
  m.options() = io::json{{"train", train_path},
                         {"test", test_path},
                         {"target", base.target},
                         {"depths", depths},
                         {"complexities", complexities},
                         {"alpha", base.alpha},
                         {"min_leaf", base.min_leaf},
                         {"restarts", base.restarts},
                         {"seed", base.seed}};
  m.input(train_path);
  m.input(test_path);
  io::write_csv(out / "sweep.csv", res.to_csv());
  m.output(out / "sweep.csv");
  io::save_json(out / "sweep.json", res.to_json());
  m.output(out / "sweep.json");
  m.save(out);

  std::printf("swept %zu cells; wall %.2fs\n", res.cells.size(), wall);
  return 0;
}

int cmd_sensors(const AppConfig& cfg, const std::string& out_dir,
                const TrainConfig& base, const std::string& depths_text) {
  const auto t0 = std::chrono::steady_clock::now();
  const PlateModel model(cfg.plate);
  const ModelLibrary lib = build_library(cfg.levels);
  const SensorLayout inst = installed_layout(cfg.plate.damage_regions);
  const SensorLayout cand = candidate_layout(cfg.plate.damage_regions);
  const std::vector<int> depths = parse_int_list(depths_text, "depth");
  const PlacementStudy study =
      placement_study(model, lib, inst, cand, cfg.load(), cfg.noise_variance,
                      cfg.samples_per_scenario, cfg.test_fraction, base, depths);
  const double wall = wall_seconds_since(t0);

  const fs::path out(out_dir);
  Manifest m("sensors");
  m.options() = io::json{{"depths", depths},
                         {"target", base.target},
                         {"split_complexity", base.max_split_complexity},
                         {"restarts", base.restarts},
                         {"seed", base.seed},
                         {"samples_per_scenario", cfg.samples_per_scenario},
                         {"noise_variance", cfg.noise_variance}};
  io::write_csv(out / "placement.csv", study.to_csv());
  m.output(out / "placement.csv");
  io::save_json(out / "placement.json", study.to_json());
  m.output(out / "placement.json");
  io::write_file(out / "placement_map.txt", study.map_text);
  m.output(out / "placement_map.txt");
  m.save(out);

  std::printf("placement study across %zu depths; wall %.2fs\n", depths.size(), wall);
  return 0;
}

int cmd_simulate(const AppConfig& cfg, const std::string& tree1_path,
                 const std::string& tree2_path, const std::string& out_dir,
                 const MissionConfig& mc) {
  const PlateModel model(cfg.plate);
  const SensorLayout layout = layout_for(cfg);
  const Tree tree1 = load_tree(tree1_path);
  const Tree tree2 = load_tree(tree2_path);
  const MissionLog log =
      run_mission(model, layout, cfg.load(), tree1, tree2, mc);

  const fs::path out(out_dir);
  Manifest m("simulate");
  m.options() = io::json{{"tree_mu1", tree1_path},
                         {"tree_mu2", tree2_path},
                         {"n_steps", mc.n_steps},
                         {"seed", mc.seed},
                         {"noise_variance", mc.noise_variance},
                         {"failure_threshold", mc.failure_threshold},
                         {"obstacle_steps", mc.obstacle_steps},
                         {"aggressive_load", mc.aggressive_load},
                         {"conservative_load", mc.conservative_load}};
  m.input(tree1_path);
  m.input(tree2_path);
  io::write_csv(out / "mission.csv", log.to_csv());
  m.output(out / "mission.csv");
  io::save_json(out / "mission.json", log.summary());
  m.output(out / "mission.json");
  m.save(out);

  std::printf("mission of %d steps: capability switch at step %d\n", mc.n_steps,
              log.switch_step);
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"digital-twin pipeline: strain datasets, classification trees, "
               "sensor studies and mission simulation"};
  app.require_subcommand(1);

  // --config is honored before flag defaults are bound, so flags override it.
  std::string config_path;
  for (std::size_t i = 0; i + 1 < args.size(); ++i)
    if (args[i] == "--config") config_path = args[i + 1];
  AppConfig cfg;
  try {
    cfg = config_for(config_path);
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }

  std::string out_dir, data_path, tree_path, tree2_path, train_path, test_path;
  int row = 0;
  std::string depths = "3,4,5,6";
  std::string complexities = "1,2,4,0";
  std::string obstacles = "20,55,85";
  TrainConfig tc;
  tc.max_depth = cfg.depth;
  tc.max_split_complexity = cfg.split_complexity;
  tc.alpha = cfg.alpha;
  tc.min_leaf = cfg.min_leaf;
  tc.restarts = cfg.restarts;
  tc.seed = cfg.seed;
  MissionConfig mc;
  mc.seed = cfg.seed;
  mc.noise_variance = cfg.noise_variance;

  const auto add_common = [&](CLI::App* c, bool needs_out) {
    c->add_option("--config", config_path, "JSON config overriding the defaults");
    auto* o = c->add_option("--out", out_dir, "output directory");
    if (needs_out) o->required();
  };
  const auto add_train_opts = [&](CLI::App* c) {
    c->add_option("--target", tc.target, "damage parameter: mu1 or mu2");
    c->add_option("--depth", tc.max_depth, "maximum tree depth");
    c->add_option("--split-complexity", tc.max_split_complexity,
                  "max nonzero coefficients per split (0 = unlimited)");
    c->add_option("--alpha", tc.alpha, "objective penalty per split");
    c->add_option("--min-leaf", tc.min_leaf, "minimum rows per leaf");
    c->add_option("--restarts", tc.restarts, "randomized restarts");
    c->add_option("--seed", tc.seed, "random seed");
  };

  CLI::App* g = app.add_subcommand("generate", "build noisy strain datasets");
  add_common(g, true);
  g->add_option("--seed", cfg.seed, "random seed");
  g->add_option("--layout", cfg.layout, "installed or candidate");
  g->add_option("--s", cfg.samples_per_scenario, "noisy samples per scenario");
  g->add_option("--variance", cfg.noise_variance, "noise variance [microstrain^2]");
  g->add_option("--load-factor", cfg.load_factor, "load factor flown");
  g->add_option("--test-fraction", cfg.test_fraction, "held-out fraction");

  CLI::App* t = app.add_subcommand("train", "fit a classification tree");
  add_common(t, true);
  t->add_option("--dataset", data_path, "training dataset csv")->required();
  add_train_opts(t);

  CLI::App* e = app.add_subcommand("evaluate", "evaluate a tree on a dataset");
  add_common(e, false);
  e->add_option("--tree", tree_path, "tree json")->required();
  e->add_option("--dataset", data_path, "dataset csv")->required();

  CLI::App* x = app.add_subcommand("explain", "print the decision path for a row");
  add_common(x, false);
  x->add_option("--tree", tree_path, "tree json")->required();
  x->add_option("--dataset", data_path, "dataset csv")->required();
  x->add_option("--row", row, "row index")->required();

  CLI::App* s = app.add_subcommand("sweep", "depth x complexity study");
  add_common(s, true);
  s->add_option("--train", train_path, "training dataset csv")->required();
  s->add_option("--test", test_path, "held-out dataset csv")->required();
  add_train_opts(s);
  s->add_option("--depths", depths, "comma-separated depths");
  s->add_option("--complexities", complexities,
                "comma-separated split complexities (0 = unlimited)");

  CLI::App* p = app.add_subcommand("sensors", "retrofit placement study");
  add_common(p, true);
  add_train_opts(p);
  p->add_option("--depths", depths, "comma-separated depths");
  p->add_option("--s", cfg.samples_per_scenario, "noisy samples per scenario");
  p->add_option("--variance", cfg.noise_variance, "noise variance [microstrain^2]");

  CLI::App* f = app.add_subcommand("simulate", "fly the twin-in-the-loop mission");
  add_common(f, true);
  f->add_option("--tree-mu1", tree_path, "tree json for the first region")->required();
  f->add_option("--tree-mu2", tree2_path, "tree json for the second region")->required();
  f->add_option("--n-steps", mc.n_steps, "mission steps");
  f->add_option("--seed", mc.seed, "noise seed");
  f->add_option("--variance", mc.noise_variance, "noise variance [microstrain^2]");
  f->add_option("--threshold", mc.failure_threshold,
                "estimate triggering the capability drop");
  f->add_option("--obstacles", obstacles, "comma-separated obstacle steps");
  f->add_option("--l-aggressive", mc.aggressive_load, "load factor at capability 3");
  f->add_option("--l-conservative", mc.conservative_load, "load factor at capability 2");

  std::vector<const char*> argv{"dtwin"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& err) {
    return app.exit(err);
  }

  try {
    // Flags were bound to cfg fields directly; sensors/simulate defaults that
    // mirror the config keep tc/mc in sync here.
    if (g->parsed()) return cmd_generate(cfg, out_dir);
    if (t->parsed()) return cmd_train(data_path, out_dir, tc);
    if (e->parsed()) return cmd_eval(tree_path, data_path, out_dir);
    if (x->parsed()) return cmd_explain(tree_path, data_path, row, out_dir);
    if (s->parsed()) return cmd_sweep(train_path, test_path, out_dir, tc, depths, complexities);
    if (p->parsed()) return cmd_sensors(cfg, out_dir, tc, depths);
    if (f->parsed()) {
      mc.obstacle_steps = parse_int_list(obstacles, "obstacle step");
      return cmd_simulate(cfg, tree_path, tree2_path, out_dir, mc);
    }
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
  std::fprintf(stderr, "error: no subcommand\n");
  return 1;
}

}  // namespace dtwin
