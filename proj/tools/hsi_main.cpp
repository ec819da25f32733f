// hsi: command-line driver for scenario runs, suites, obstacle experiments,
// the toy preference optimizer and offline metrics.
//
// Exit codes: 0 success, 1 usage, 2 config, 3 parse, 4 planning, 5 generator,
// 6 graph, 7 metric, 8 numerical, 9 transport, 10 schema, 11 validation,
// 12 other library error, 13 file output, 70 unexpected.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "hsi/harness.hpp"
#include "hsi/preference_opt.hpp"

namespace fs = std::filesystem;
using namespace hsi;

namespace {

int exit_code(std::string_view kind) {
  static const std::map<std::string_view, int> codes = {
      {"config", 2},    {"parse", 3},      {"planning", 4},  {"generator", 5},   {"graph", 6},
      {"metric", 7},    {"numerical", 8},  {"transport", 9}, {"schema", 10},     {"validation", 11},
      {"internal", 12}, {"unexpected", 70}};
  const auto it = codes.find(kind);
  return it == codes.end() ? 12 : it->second;
}

struct OutputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw OutputError("cannot write " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Common {
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool no_critic = false;
  bool no_planner = false;
  std::string backend;
  std::string endpoint;
  std::string out_dir = ".";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Run seed")->each([&c](const std::string&) { c.seed_given = true; });
  cmd->add_flag("--no-critic", c.no_critic, "Disable the critic (clips append verbatim)");
  cmd->add_flag("--no-planner", c.no_planner, "Disable the planner (one custom action per milestone)");
  cmd->add_option("--backend", c.backend, "Agent backend")->check(CLI::IsMember({"rule", "remote"}));
  cmd->add_option("--endpoint", c.endpoint, "Remote agent endpoint, http://host:port/path");
  cmd->add_option("--out-dir", c.out_dir, "Output directory");
}

void apply(const Common& c, ScenarioConfig& cfg) {
  if (c.no_critic) cfg.critic = false;
  if (c.no_planner) cfg.planner = false;
  if (!c.backend.empty()) cfg.backend = c.backend;
  if (!c.endpoint.empty()) cfg.endpoint = c.endpoint;
  validate(cfg);
}

fs::path out_dir(const Common& c) {
  fs::path dir(c.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw OutputError("cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

void save_trace(const fs::path& dir, const std::string& stem, const RunTrace& t) {
  write_file(dir / (stem + ".events.jsonl"), t.events_jsonl());
  write_file(dir / (stem + ".graph.jsonl"), t.graph);
  write_file(dir / (stem + ".path.json"), clip_json(t.path));
  write_file(dir / (stem + ".metrics.csv"), metrics_csv({t.metrics}));
}

std::string stem_of(const ScenarioConfig& cfg, std::uint64_t seed) {
  return cfg.id + "_seed" + std::to_string(seed);
}

int cmd_run(const std::string& config, const Common& c) {
  ScenarioConfig cfg = load_scenario(config);
  apply(c, cfg);
  const std::uint64_t seed = c.seed_given ? c.seed : cfg.seeds.front();
  const RunTrace t = run_scenario(cfg, seed);
  save_trace(out_dir(c), stem_of(cfg, seed), t);
  std::cout << metrics_csv({t.metrics});
  if (t.metrics.failed) {
    std::cerr << "run failed: " << t.metrics.error << '\n';
    return exit_code(t.error_kind);
  }
  return 0;
}

int cmd_suite(const std::string& dir, const Common& c, const std::string& seeds_text, unsigned threads) {
  std::vector<ScenarioConfig> configs = load_scenario_dir(dir);
  for (ScenarioConfig& cfg : configs) {
    if (!c.backend.empty()) cfg.backend = c.backend;
    if (!c.endpoint.empty()) cfg.endpoint = c.endpoint;
    validate(cfg);
  }
  std::vector<std::uint64_t> seeds;
  if (!seeds_text.empty()) {
    const auto dash = seeds_text.find('-');
    try {
      if (dash == std::string::npos) {
        for (std::uint64_t s = 0, n = std::stoull(seeds_text); s < n; ++s) seeds.push_back(s);
      } else {
        const std::uint64_t lo = std::stoull(seeds_text.substr(0, dash)), hi = std::stoull(seeds_text.substr(dash + 1));
        for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
      }
    } catch (const std::exception&) {
      throw ConfigError("--seeds must be N or LO-HI");
    }
  } else if (c.seed_given) {
    seeds = {c.seed};
  } else {
    seeds = configs.front().seeds;
  }
  std::vector<Ablation> ablations;
  if (c.no_critic || c.no_planner) {
    ablations.push_back({"custom", !c.no_critic, !c.no_planner});
  } else {
    ablations = {{"full", true, true}, {"no_critic", false, true}, {"no_planner", true, false}};
  }
  const SuiteReport r = run_suite(configs, seeds, ablations, threads);
  const fs::path out = out_dir(c);
  write_file(out / "suite_runs.csv", metrics_csv(r.rows));
  write_file(out / "suite_table.csv", r.table_csv());
  write_file(out / "suite.json", metrics_json(r.aggregate));
  std::cout << r.table_csv();
  return 0;
}

int cmd_obstacles(const std::string& config, const Common& c, bool ignore) {
  ScenarioConfig cfg = load_scenario(config);
  apply(c, cfg);
  const std::uint64_t seed = c.seed_given ? c.seed : cfg.seeds.front();
  const ObstacleExperiment x = obstacle_experiment(prepare(cfg), seed, ignore);
  const fs::path out = out_dir(c);
  const std::string stem = stem_of(cfg, seed);
  save_trace(out, stem + "_with", x.with_obstacles);
  save_trace(out, stem + "_without", x.without_obstacles);
  std::printf("scenario,seed,ignore_obstacles,POS,RDS\n%s,%llu,%d,%.6f,%.6f\n", cfg.id.c_str(),
              static_cast<unsigned long long>(seed), ignore ? 1 : 0, x.pos, x.rds);
  for (const RunTrace* t : {&x.with_obstacles, &x.without_obstacles})
    if (t->metrics.failed) {
      std::cerr << "run failed: " << t->metrics.error << '\n';
      return exit_code(t->error_kind);
    }
  return 0;
}

int cmd_dpo(const Common& c, int pairs, int steps, bool large, bool swap, const std::string& init) {
  dpo::DpoConfig cfg = large ? dpo::DpoConfig::large_scale() : dpo::DpoConfig::toy();
  cfg.steps = steps;
  cfg.seed = c.seed;
  dpo::validate(cfg);
  std::vector<dpo::PreferencePair> data = dpo::synth_pairs(pairs, c.seed);
  if (swap)
    for (dpo::PreferencePair& p : data) std::swap(p.preferred, p.dispreferred);
  const std::size_t n_train = data.size() * 4 / 5;
  const std::vector<dpo::PreferencePair> train_set(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(n_train));
  const std::vector<dpo::PreferencePair> held_out(data.begin() + static_cast<std::ptrdiff_t>(n_train), data.end());
  if (held_out.empty()) throw ConfigError("--pairs leaves no held-out pairs");

  const dpo::DenoiserModel start = init.empty() ? dpo::DenoiserModel::random(c.seed) : dpo::load_checkpoint(init);
  const double acc0 = dpo::eval_preference_accuracy(start, held_out, cfg);
  const dpo::TrainResult r = dpo::train(start, train_set, cfg);
  const double acc1 = dpo::eval_preference_accuracy(r.model, held_out, cfg);
  const double margin = dpo::preference_margin(r.model, held_out, cfg);

  const fs::path out = out_dir(c);
  dpo::save_checkpoint(r.model, out / "denoiser.ckpt");
  write_file(out / "dpo_loss.csv", dpo::loss_trace_csv(r.loss_trace));
  std::printf("pairs,train,held_out,steps,beta,accuracy_before,accuracy_after,margin,final_loss\n");
  std::printf("%d,%zu,%zu,%d,%g,%.4f,%.4f,%.6f,%.6f\n", pairs, train_set.size(), held_out.size(), cfg.steps, cfg.beta,
              acc0, acc1, margin, r.loss_trace.empty() ? 0.0 : r.loss_trace.back());
  return 0;
}

int cmd_metrics(const std::string& clip_path, const std::string& scene_path, const std::string& config,
                const std::string& reference) {
  const MotionClip clip = parse_clip_json(read_file(clip_path));
  const Skeleton& sk = Skeleton::canonical();
  MetricsReport m;
  m.scenario = fs::path(clip_path).stem().string();
  m.frames = clip.frame_count();
  if (!config.empty()) {
    const ScenarioConfig cfg = load_scenario(config);
    m.scenario = cfg.id;
    m.p_score = penetration_score(clip, load_scene(cfg.scene_path), sk);
    std::vector<ObstacleSpec> obs;
    for (const ObstacleInjection& o : cfg.obstacles) obs.push_back(o.spec);
    if (!obs.empty()) m.pos = penetration_obstacle_score(clip, obs, sk);
  } else if (!scene_path.empty()) {
    m.p_score = penetration_score(clip, load_scene(scene_path), sk);
  }
  if (clip.frames.size() >= 2) m.fs = foot_sliding(clip, sk);
  if (!reference.empty()) m.rds = reaction_divergence(clip, parse_clip_json(read_file(reference)), sk);
  std::cout << metrics_csv({m});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scene-aware long-horizon human motion: planning, generation and evaluation harness"};
  app.require_subcommand(1);

  Common common;
  std::string config, dir, seeds_text, init, clip, scene, reference;
  unsigned threads = 0;
  bool ignore = false, large = false, swap = false;
  int pairs = 200, steps = 2000;

  CLI::App* run = app.add_subcommand("run", "Run one scenario");
  run->add_option("config", config, "Scenario file")->required();
  add_common(run, common);

  CLI::App* suite = app.add_subcommand("suite", "Run a directory of scenarios under the ablation settings");
  suite->add_option("dir", dir, "Scenario directory")->required();
  suite->add_option("--seeds", seeds_text, "Seed count N or range LO-HI");
  suite->add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");
  add_common(suite, common);

  CLI::App* obstacles = app.add_subcommand("obstacles", "Paired with/without-obstacle experiment");
  obstacles->add_option("config", config, "Scenario file")->required();
  obstacles->add_flag("--ignore-obstacles", ignore, "Planner and critic do not perceive injected obstacles");
  add_common(obstacles, common);

  CLI::App* dpo_cmd = app.add_subcommand("dpo", "Train the toy denoiser with preference optimization");
  dpo_cmd->add_option("--pairs", pairs, "Synthetic preference pairs (80% train)")->check(CLI::Range(2, 1000000));
  dpo_cmd->add_option("--steps", steps, "Optimizer steps")->check(CLI::Range(0, 10000000));
  dpo_cmd->add_flag("--large-scale-hyperparameters", large, "Use beta 5000 and learning rate 1e-5");
  dpo_cmd->add_flag("--swap-labels", swap, "Exchange preferred and dispreferred samples");
  dpo_cmd->add_option("--init", init, "Start from a checkpoint");
  add_common(dpo_cmd, common);

  CLI::App* metrics = app.add_subcommand("metrics", "Compute metrics on a stored clip");
  metrics->add_option("clip", clip, "Clip file written by run (*.path.json)")->required();
  metrics->add_option("--scene", scene, "Scene mesh for the penetration score");
  metrics->add_option("--config", config, "Scenario file: scene and obstacles");
  metrics->add_option("--reference", reference, "Paired clip for the reaction divergence");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) return cmd_run(config, common);
    if (*suite) return cmd_suite(dir, common, seeds_text, threads);
    if (*obstacles) return cmd_obstacles(config, common, ignore);
    if (*dpo_cmd) return cmd_dpo(common, pairs, steps, large, swap, init);
    if (*metrics) return cmd_metrics(clip, scene, config, reference);
  } catch (const OutputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 13;
  } catch (const std::exception& e) {
    std::cerr << "error (" << error_kind(e) << "): " << e.what() << '\n';
    return exit_code(error_kind(e));
  }
  return 1;
}
