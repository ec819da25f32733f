#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hsi/generator.hpp"
#include "hsi/graph.hpp"
#include "hsi/plan.hpp"
#include "hsi/scene.hpp"

namespace hsi {

// Annotated sub-goal standing in for the semantic scene analysis a
// vision-language model would perform.
struct SubGoal {
  Vec3 position;  // ground point
  std::optional<double> facing;
  std::string label = "arrive";
  int layer = 0;
  std::string description;
};

// Ladder or stairs between two nav layers. bottom is the ground point at the
// foot of the link on the lower layer; top is where the agent steps off on the
// upper layer.
struct VerticalLink {
  int lower_layer = 0;
  int upper_layer = 1;
  Vec3 bottom;
  Vec3 top;
};

struct NavMap {
  std::vector<NavGrid> layers;
  std::vector<VerticalLink> links;
};

struct TaskSpec {
  std::string text;
  HumanState start;
  int scene_version = 0;
  std::vector<SubGoal> subgoals;
  std::vector<std::string> interactive_tags;
};

struct PlannerConfig {
  double max_walk = 2.5;   // m per walk_to unit
  double max_climb = 1.5;  // m per climb_segment unit
  double turn_threshold = deg_to_rad(15.0);
  double facing_threshold = deg_to_rad(5.0);
  double obstacle_distance = 0.6;  // footprint-to-path distance triggering step_over
  double step_margin = 0.75;       // run-up on each side of a footprint
  int arrive_idle_frames = 10;  // filler when a milestone is already satisfied
  bool ignore_obstacles = false;
  double pelvis_height = 0.94;
  GeneratorConfig generator;
};

// Everything plan_chain needs besides the start state.
struct PlanRequest {
  const KeyPlan* plan = nullptr;
  std::size_t milestone = 0;
  std::vector<ObstacleExtent> obstacles;
  PlannerConfig config;
};

enum class Verdict { accept, backtrack, replan };
std::string_view verdict_name(Verdict v);

struct CameraPose {
  Vec3 position;
  Vec3 look_at;
  int azimuth = -1;  // candidate index, -1 for the overhead fallback
  bool degraded = false;
};

struct Critique {
  Verdict verdict = Verdict::accept;
  int kept_frame = 0;
  double corrective_yaw = 0.0;
  CameraPose camera;
  std::optional<ActionChain> adjusted_chain;
};

struct CriticConfig {
  double w_distance = 1.0;  // per meter
  double w_heading = 0.5;   // per radian
  double w_penetration = 5.0;
  double threshold = 0.6;
  int stride = 5;
  int correction_window = 15;
  double correction_threshold = deg_to_rad(10.0);
  double pelvis_height = 0.94;
};

struct CritiqueContext {
  const std::vector<Vec3>* polyline = nullptr;  // ground-point waypoints in force
  const ActionUnit* unit = nullptr;             // the unit the clip realizes
  const SceneMesh* scene = nullptr;             // geometry the critic perceives
  Vec3 target;                                  // milestone ground point, for the camera
  const PlanRequest* replan = nullptr;          // used to build an adjusted chain
};

struct CameraConfig {
  double radius = 4.0;
  double height = 1.6;
  int azimuths = 16;
  double overhead_height = 8.0;
  double head_height = 0.7;  // above the pelvis
};

// 8-connected A* with no corner cutting followed by line-of-sight smoothing.
// Returns ground points from `from` to `to` exactly. Throws PlanningError if
// either end is unwalkable or no route exists.
std::vector<Vec3> find_path(const NavGrid& nav, const Vec3& from, const Vec3& to);
// True if every cell the segment passes through is walkable.
bool line_of_sight(const NavGrid& nav, const Vec3& a, const Vec3& b);

// Layer whose ground height is closest to z.
int layer_for_height(const NavMap& map, double z);

// Obstacle footprint summary from a posed obstacle mesh.
ObstacleExtent obstacle_extent(const SceneMesh& posed, const std::string& tag);

// Rule-based operations.
KeyPlan navigate(const TaskSpec& task, const NavMap& map, double pelvis_height = 0.94);
ActionChain plan_chain(const HumanState& from, const PlanRequest& request);
double deviation_score(const HumanState& state, const CritiqueContext& context, const CriticConfig& config);
Critique critique(const MotionClip& clip, const CritiqueContext& context, const CriticConfig& config = {});
CameraPose place_camera(const HumanState& head, const Vec3& target, const SceneMesh& scene,
                        const CameraConfig& config = {});

// Drops frames after the kept frame and spreads the corrective yaw linearly
// over the last min(i, window) kept frames. The graph must already hold the
// clip as executed edges after clip.source_node; nodes made from dropped
// frames are pruned and the head is rebound to the corrected final frame.
struct Correction {
  MotionClip kept;
  std::size_t pruned = 0;
  NodeId head = 0;
};
MotionClip correct_clip(const MotionClip& clip, int kept_frame, double yaw, int window);
Correction apply_correction(InteractionGraph& graph, const MotionClip& clip, const Critique& critique,
                            const ActionUnit& unit, int scene_version, NodeId candidate = kNextKey,
                            int window = 15);

class AgentBackend {
 public:
  virtual ~AgentBackend() = default;
  virtual std::string name() const = 0;
  virtual KeyPlan navigate(const TaskSpec& task, const NavMap& map) = 0;
  virtual ActionChain plan_chain(const HumanState& from, const PlanRequest& request) = 0;
  virtual Critique critique(const MotionClip& clip, const CritiqueContext& context) = 0;
};

class RuleBackend : public AgentBackend {
 public:
  explicit RuleBackend(CriticConfig critic = {}) : critic_(critic) {}
  std::string name() const override { return "rule"; }
  KeyPlan navigate(const TaskSpec& task, const NavMap& map) override;
  ActionChain plan_chain(const HumanState& from, const PlanRequest& request) override;
  Critique critique(const MotionClip& clip, const CritiqueContext& context) override;

 private:
  CriticConfig critic_;
};

// JSON-over-HTTP agent service (docs/remote_protocol.md). Every response is
// schema-checked and geometry-checked; a failing response is retried, then
// surfaced as TransportError, SchemaError or ValidationError.
class RemoteBackend : public AgentBackend {
 public:
  struct Options {
    std::string endpoint;  // http://host:port/path
    int retries = 2;
    std::chrono::milliseconds timeout{5000};
  };
  explicit RemoteBackend(Options options);
  std::string name() const override { return "remote"; }
  KeyPlan navigate(const TaskSpec& task, const NavMap& map) override;
  ActionChain plan_chain(const HumanState& from, const PlanRequest& request) override;
  Critique critique(const MotionClip& clip, const CritiqueContext& context) override;

 private:
  Options options_;
  std::string host_, path_;
  int port_ = 80;
  std::string post(const std::string& body);
};

// Request bodies and response decoders, exposed for golden-fixture tests.
namespace remote {
inline constexpr const char* kSchema = "hsi-agent/1";
std::string navigate_request(const TaskSpec& task, const NavMap& map);
std::string plan_request(const HumanState& from, const PlanRequest& request);
std::string critique_request(const MotionClip& clip, const CritiqueContext& context);
KeyPlan decode_plan(const std::string& body, const TaskSpec& task, const NavMap& map);
ActionChain decode_chain(const std::string& body, const PlannerConfig& config);
Critique decode_critique(const std::string& body, const MotionClip& clip);
}  // namespace remote

}  // namespace hsi
