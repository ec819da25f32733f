#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hsi/agents.hpp"
#include "hsi/generator.hpp"
#include "hsi/graph.hpp"
#include "hsi/metrics.hpp"
#include "hsi/scene.hpp"

namespace hsi {

struct NavLayerConfig {
  double ground_z = 0.0;
  bool require_support = false;
};

struct ObstacleInjection {
  ObstacleSpec spec;
  std::filesystem::path mesh_path;
  // Inserted before the first clip, or once the head comes within distance
  // (horizontal, to the obstacle's footprint center).
  std::optional<double> within;
};

// Scenario file, schema "hsi-scenario/1" (docs/scenario_format.md).
struct ScenarioConfig {
  std::string id;
  std::filesystem::path scene_path;
  std::string task;
  HumanState start;
  double nav_cell = 0.1;
  double clearance = 0.3;
  std::vector<NavLayerConfig> layers{NavLayerConfig{}};
  std::vector<SubGoal> subgoals;
  std::vector<VerticalLink> links;
  std::vector<ObstacleInjection> obstacles;
  NoiseModel noise;  // seed ignored; runs derive it from the run seed
  std::string backend = "rule";
  std::string endpoint;
  bool critic = true;
  bool planner = true;
  std::vector<std::uint64_t> seeds{0};
  std::int64_t frame_budget = 3000;
  PlannerConfig planner_config;
  CriticConfig critic_config;
};

ScenarioConfig parse_scenario(const std::string& text, const std::filesystem::path& base_dir);
ScenarioConfig load_scenario(const std::filesystem::path& path);
void validate(const ScenarioConfig& config);

// Scene geometry and nav layers shared by every run of a scenario.
struct PreparedScenario {
  ScenarioConfig config;
  SceneMesh scene;
  NavMap nav;
};
PreparedScenario prepare(const ScenarioConfig& config);

struct RunOptions {
  bool inject_obstacles = true;
  // The planner and critic do not perceive injected obstacles.
  bool ignore_obstacles = false;
  std::shared_ptr<AgentBackend> backend;  // overrides the configured backend
};

struct RunTrace {
  std::vector<std::string> events;  // one JSON object per line
  std::string graph;                // InteractionGraph::export_trace
  MetricsReport metrics;
  MotionClip path;                  // executed path frames
  std::vector<ObstacleSpec> obstacles;  // obstacles in force at the end
  std::int64_t frames_generated = 0;
  int clips = 0;
  int accepts = 0, backtracks = 0, replans = 0, prune_events = 0;
  int extra_clips = 0;  // clips carrying an unplanned segment
  std::string error_kind;  // error_kind() of a recorded failure, empty on success

  std::string events_jsonl() const;
};

RunTrace run_scenario(const PreparedScenario& scenario, std::uint64_t seed, const RunOptions& options = {});
RunTrace run_scenario(const ScenarioConfig& config, std::uint64_t seed, const RunOptions& options = {});

struct Ablation {
  std::string name;
  bool critic = true;
  bool planner = true;
};

struct SuiteReport {
  std::vector<MetricsReport> rows;       // one per (setting, config, seed)
  std::vector<MetricsReport> aggregate;  // one per setting, means over rows
  std::string table_csv() const;
};

// Runs every config x seed under each ablation. Runs execute on `threads`
// workers; results are reduced in a fixed order.
SuiteReport run_suite(const std::vector<ScenarioConfig>& configs, const std::vector<std::uint64_t>& seeds,
                      const std::vector<Ablation>& ablations, unsigned threads = 0);

struct ObstacleExperiment {
  RunTrace with_obstacles;
  RunTrace without_obstacles;
  double pos = 0.0;
  double rds = 0.0;
};
ObstacleExperiment obstacle_experiment(const PreparedScenario& scenario, std::uint64_t seed,
                                       bool ignore_obstacles = false);

std::vector<ScenarioConfig> load_scenario_dir(const std::filesystem::path& dir);

// Short class name of a library error ("config", "planning", "transport", ...).
std::string_view error_kind(const std::exception& e);

// Stored clips: {"fps": 30, "label": "...", "frames": [{"root", "yaw", "joints", "shape"}, ...]}.
std::string clip_json(const MotionClip& clip);
MotionClip parse_clip_json(const std::string& text);

}  // namespace hsi
